#pragma once

// Fuzzy associative memory: (sentiment, control mode) -> emotion, with
// triangular memberships and weighted-centroid defuzzification.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "pomdp_dm/errors.hpp"
#include "pomdp_dm/level_mode.hpp"
#include "pomdp_dm/sentiment.hpp"

namespace pdm {

enum class Emotion { Disgust = 0, Anger, Fear, Sad, Neutral, Surprise, Happy };

inline constexpr std::array kAllEmotions{Emotion::Disgust, Emotion::Anger,    Emotion::Fear, Emotion::Sad,
                                         Emotion::Neutral, Emotion::Surprise, Emotion::Happy};

inline constexpr double centroid(Emotion e) {
  constexpr std::array<double, 7> kCentroids{0.0, 1.0, 2.0, 3.0, 3.5, 4.0, 5.0};
  return kCentroids[static_cast<std::size_t>(e)];
}

inline std::string to_string(Emotion e) {
  switch (e) {
    case Emotion::Disgust: return "disgust";
    case Emotion::Anger: return "anger";
    case Emotion::Fear: return "fear";
    case Emotion::Sad: return "sad";
    case Emotion::Neutral: return "neutral";
    case Emotion::Surprise: return "surprise";
    case Emotion::Happy: return "happy";
  }
  return "?";
}

inline bool is_neutral_or_positive(Emotion e) {
  return e == Emotion::Neutral || e == Emotion::Surprise || e == Emotion::Happy;
}

inline constexpr std::size_t kFammRows = 3;
inline constexpr std::size_t kFammCols = 4;
inline constexpr std::size_t kFammCells = kFammRows * kFammCols;

inline constexpr std::size_t famm_cell(SentimentClass row, ControlMode col) {
  return static_cast<std::size_t>(row) * kFammCols + static_cast<std::size_t>(col);
}

// Rows Negative/Neutral/Positive, columns Strategic/Tactical/Opportunistic/Scrambled.
struct FammTable {
  std::array<Emotion, kFammCells> cells{
      Emotion::Disgust, Emotion::Anger, Emotion::Neutral,  Emotion::Fear,     //
      Emotion::Fear,    Emotion::Sad,   Emotion::Surprise, Emotion::Sad,      //
      Emotion::Happy,   Emotion::Neutral, Emotion::Surprise, Emotion::Neutral,  //
  };

  Emotion at(SentimentClass row, ControlMode col) const { return cells[famm_cell(row, col)]; }
};

using FuzzyWeights = std::array<double, kFammCells>;

inline double triangle(double x, double peak, double half_width) {
  return std::max(0.0, 1.0 - std::abs(x - peak) / half_width);
}

inline std::array<double, kFammRows> sentiment_memberships(double compound) {
  return {std::max(0.0, -compound), triangle(compound, 0.0, 0.5), std::max(0.0, compound)};
}

// Edge modes are shouldered: full membership beyond their peak.
inline std::array<double, kFammCols> mode_memberships(double ratio) {
  constexpr std::array<double, kFammCols> kPeaks{0.125, 0.375, 0.625, 0.875};
  std::array<double, kFammCols> mu{};
  for (std::size_t i = 0; i < kFammCols; ++i) mu[i] = triangle(ratio, kPeaks[i], 0.25);
  if (ratio <= kPeaks.front()) mu.front() = 1.0;
  if (ratio >= kPeaks.back()) mu.back() = 1.0;
  return mu;
}

inline FuzzyWeights fuzzify(double compound, double ratio) {
  if (!(compound >= -1.0 && compound <= 1.0)) throw OutOfRange("compound must lie in [-1, 1]");
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw OutOfRange("ratio must lie in [0, 1]");
  const auto rows = sentiment_memberships(compound);
  const auto cols = mode_memberships(ratio);
  FuzzyWeights w{};
  for (std::size_t r = 0; r < kFammRows; ++r)
    for (std::size_t c = 0; c < kFammCols; ++c) w[r * kFammCols + c] = rows[r] * cols[c];
  return w;
}

// X = sum(W_n * FAMM_n) / sum(W_n)
inline double defuzzify(const FuzzyWeights& w, const FammTable& famm) {
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < kFammCells; ++n) {
    if (w[n] < 0.0) throw OutOfRange("fuzzy weights must be non-negative");
    num += w[n] * centroid(famm.cells[n]);
    den += w[n];
  }
  if (!(den > 0.0)) throw AllZeroWeights("no fuzzy rule fired");
  // A convex combination of centroids; clamp away rounding at the ends.
  return std::clamp(num / den, centroid(Emotion::Disgust), centroid(Emotion::Happy));
}

// Nearest centroid; an exact midpoint resolves to the lower centroid.
inline Emotion crisp_emotion(double x) {
  if (!(x >= centroid(Emotion::Disgust) && x <= centroid(Emotion::Happy)))
    throw OutOfRange("crisp output must lie within the centroid range");
  Emotion best = kAllEmotions.front();
  for (Emotion e : kAllEmotions)
    if (std::abs(x - centroid(e)) < std::abs(x - centroid(best))) best = e;
  return best;
}

}  // namespace pdm
