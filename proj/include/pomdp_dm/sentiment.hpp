#pragma once

// Lexicon-based sentiment scoring. Token valences are summed with negation
// flipping and an exclamation booster, then squashed into a compound score in
// [-1, 1].

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pomdp_dm/errors.hpp"

namespace pdm {

struct SentimentScore {
  double compound = 0.0;
  double neg = 0.0;
  double neu = 1.0;
  double pos = 0.0;
};

enum class SentimentClass { Negative = 0, Neutral = 1, Positive = 2 };

inline std::string to_string(SentimentClass c) {
  switch (c) {
    case SentimentClass::Negative: return "negative";
    case SentimentClass::Neutral: return "neutral";
    case SentimentClass::Positive: return "positive";
  }
  return "?";
}

struct RewardSignal {
  double value = 0.0;
  SentimentClass sentiment = SentimentClass::Neutral;
  bool turn_penalty_applied = false;
};

struct RewardConstants {
  double positive = 1.0;
  double neutral = 0.0;
  double negative = -1.0;
  double step_penalty = -0.1;
  double goal_bonus = 5.0;
};

class Lexicon {
 public:
  Lexicon() = default;

  // `token<TAB>valence` per line, '#' starts a comment line. Valences lie in
  // [-4, 4]; duplicate tokens are rejected.
  static Lexicon parse(std::istream& in, const std::string& source = "<lexicon>") {
    Lexicon lex;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto tab = line.find('\t');
      auto fail = [&](const std::string& why) {
        throw ModelError(source + ":" + std::to_string(line_no) + ": " + why);
      };
      if (tab == std::string::npos || tab == 0) fail("expected token<TAB>valence");
      const std::string token = line.substr(0, tab);
      double valence = 0.0;
      try {
        std::size_t used = 0;
        valence = std::stod(line.substr(tab + 1), &used);
        if (tab + 1 + used != line.size()) fail("trailing characters after valence");
      } catch (const std::logic_error&) {
        fail("valence is not a number");
      }
      if (!(valence >= -4.0 && valence <= 4.0)) fail("valence outside [-4, 4]");
      if (!lex.valence_.emplace(token, valence).second) fail("duplicate token '" + token + "'");
    }
    return lex;
  }

  static Lexicon load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open lexicon file " + path);
    return parse(in, path);
  }

  double valence(const std::string& token) const {
    auto it = valence_.find(token);
    return it == valence_.end() ? 0.0 : it->second;
  }
  bool contains(const std::string& token) const { return valence_.count(token) != 0; }
  std::size_t size() const { return valence_.size(); }

 private:
  std::unordered_map<std::string, double> valence_;
};

// Lowercases and splits on whitespace; leading and trailing punctuation is
// stripped, interior apostrophes and hyphens are kept ("don't", "keyword-based").
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string word;
  auto flush = [&] {
    std::size_t b = 0, e = word.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(word[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(word[e - 1]))) --e;
    if (e > b) tokens.push_back(word.substr(b, e - b));
    word.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c) && c != '\'' && c != '-') {
      // Sentence punctuation splits tokens ("ok.then").
      flush();
    } else {
      word.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return tokens;
}

inline bool is_negator(const std::string& t) {
  static const std::unordered_set<std::string> kNegators{
      "no",     "not",   "don't", "dont",    "never",  "nor",     "cannot",   "can't",    "won't",
      "doesn't", "didn't", "isn't", "aren't", "wasn't", "weren't", "shouldn't", "wouldn't", "couldn't"};
  return kNegators.count(t) != 0;
}

inline constexpr double kExclamationBoost = 0.292;
inline constexpr int kMaxExclamations = 3;
inline constexpr double kCompoundAlpha = 15.0;

inline SentimentScore score_utterance(std::string_view text, const Lexicon& lexicon) {
  if (std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }))
    throw EmptyInput("cannot score an empty utterance");

  double sum = 0.0, pos_sum = 0.0, neg_sum = 0.0;
  int neutral_count = 0;
  // A negator flips the sign of the next scored token.
  bool flip_next = false;
  for (const auto& token : tokenize(text)) {
    double v = lexicon.valence(token);
    if (v != 0.0 && flip_next) {
      v = -v;
      flip_next = false;
    }
    if (is_negator(token)) flip_next = true;
    sum += v;
    if (v > 0.0) {
      pos_sum += v + 1.0;
    } else if (v < 0.0) {
      neg_sum += v - 1.0;
    } else {
      ++neutral_count;
    }
  }

  const int bangs = std::min<int>(kMaxExclamations, static_cast<int>(std::count(text.begin(), text.end(), '!')));
  const double boost = bangs * kExclamationBoost;
  if (sum > 0.0) {
    sum += boost;
  } else if (sum < 0.0) {
    sum -= boost;
  }
  if (pos_sum > std::abs(neg_sum)) {
    pos_sum += boost;
  } else if (pos_sum < std::abs(neg_sum)) {
    neg_sum -= boost;
  }

  SentimentScore s;
  s.compound = std::clamp(sum / std::sqrt(sum * sum + kCompoundAlpha), -1.0, 1.0);
  const double total = pos_sum + std::abs(neg_sum) + neutral_count;
  if (total > 0.0) {
    s.pos = pos_sum / total;
    s.neg = std::abs(neg_sum) / total;
    s.neu = neutral_count / total;
  }
  return s;
}

inline constexpr double kClassCutoff = 0.05;

inline SentimentClass classify(const SentimentScore& s) {
  if (s.compound >= kClassCutoff) return SentimentClass::Positive;
  if (s.compound <= -kClassCutoff) return SentimentClass::Negative;
  return SentimentClass::Neutral;
}

// Terminal goal-reaching turns earn the goal bonus instead of the step penalty.
inline RewardSignal to_reward(SentimentClass c, bool is_terminal_goal, const RewardConstants& k = {}) {
  RewardSignal r;
  r.sentiment = c;
  switch (c) {
    case SentimentClass::Positive: r.value = k.positive; break;
    case SentimentClass::Neutral: r.value = k.neutral; break;
    case SentimentClass::Negative: r.value = k.negative; break;
  }
  if (is_terminal_goal) {
    r.value += k.goal_bonus;
  } else {
    r.value += k.step_penalty;
    r.turn_penalty_applied = true;
  }
  return r;
}

}  // namespace pdm
