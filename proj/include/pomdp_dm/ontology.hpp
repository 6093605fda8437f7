#pragma once

// Requirement ontology (a tree of features with pairwise conflicts), keyword
// cue NLU producing observation distributions, and the depth-first
// customization walk that generates agent prompts.

#include <algorithm>
#include <array>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "pomdp_dm/errors.hpp"
#include "pomdp_dm/sentiment.hpp"

namespace pdm {

enum class NodeKind { Required, Optional, QualityConstraint };

inline std::string to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Required: return "required";
    case NodeKind::Optional: return "optional";
    case NodeKind::QualityConstraint: return "quality_constraint";
  }
  return "?";
}

struct OntologyNode {
  std::string id;
  std::string name;
  std::string description;
  NodeKind kind = NodeKind::Optional;
  std::vector<std::string> children;
  std::vector<std::string> conflicts_with;
  std::string prompt;     // question for optional nodes, announcement for required ones
  std::string info_text;  // answer to an information request
};

struct DialogueTexts {
  std::string review = "All the requirements have been evaluated. Would you like to make any changes?";
  std::string review_info = "You can keep the current selection or start a new customization to change it.";
  std::string completion = "The customization process is complete. Thank you for your cooperation.";
  std::string farewell = "Thank you and see you soon.";
  std::string clarify = "Your response cannot be recognized. Please answer with the suggested response.";
  std::string confirm_prefix = "Just to confirm.";
};

class Ontology {
 public:
  Ontology() = default;

  // Validates ids, references, the tree shape and conflict symmetry.
  Ontology(std::vector<OntologyNode> nodes, DialogueTexts texts, const std::string& source_text = {})
      : nodes_(std::move(nodes)), texts_(std::move(texts)) {
    auto where = [&](const std::string& id) {
      const std::size_t line = line_of(source_text, id);
      return line ? " (line " + std::to_string(line) + ")" : std::string();
    };
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].id.empty()) throw ModelError("ontology node with an empty id");
      if (!index_.emplace(nodes_[i].id, i).second)
        throw ModelError("duplicate ontology node '" + nodes_[i].id + "'" + where(nodes_[i].id));
    }
    children_.resize(nodes_.size());
    conflicts_.resize(nodes_.size());
    parent_.assign(nodes_.size(), std::nullopt);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      for (const auto& c : nodes_[i].children) {
        auto it = index_.find(c);
        if (it == index_.end())
          throw DanglingReference("node '" + nodes_[i].id + "' lists missing child '" + c + "'" + where(nodes_[i].id));
        if (parent_[it->second] || it->second == i)
          throw CycleDetected("node '" + c + "' has more than one parent or is its own child" + where(c));
        parent_[it->second] = i;
        children_[i].push_back(it->second);
      }
      for (const auto& c : nodes_[i].conflicts_with) {
        auto it = index_.find(c);
        if (it == index_.end())
          throw DanglingReference("node '" + nodes_[i].id + "' conflicts with missing node '" + c + "'" +
                                  where(nodes_[i].id));
        conflicts_[i].push_back(it->second);
      }
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      for (std::size_t j : conflicts_[i])
        if (std::find(conflicts_[j].begin(), conflicts_[j].end(), i) == conflicts_[j].end())
          throw AsymmetricConflict("'" + nodes_[i].id + "' conflicts with '" + nodes_[j].id +
                                   "' but not vice versa" + where(nodes_[j].id));

    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (!parent_[i]) roots.push_back(i);
    if (!nodes_.empty()) {
      // Every node has at most one parent, so a parentless-node-free graph,
      // or nodes unreachable from the root, can only come from a cycle.
      if (roots.empty()) throw CycleDetected("ontology has no root: the parent links form a cycle");
      if (roots.size() > 1)
        throw ModelError("ontology has several roots: '" + nodes_[roots[0]].id + "' and '" + nodes_[roots[1]].id + "'");
      root_ = roots.front();
      std::vector<bool> seen(nodes_.size(), false);
      std::vector<std::size_t> stack{*root_};
      while (!stack.empty()) {
        const std::size_t n = stack.back();
        stack.pop_back();
        if (seen[n]) throw CycleDetected("cycle through '" + nodes_[n].id + "'" + where(nodes_[n].id));
        seen[n] = true;
        preorder_.push_back(n);
        for (auto it = children_[n].rbegin(); it != children_[n].rend(); ++it) stack.push_back(*it);
      }
      for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (!seen[i]) throw CycleDetected("node '" + nodes_[i].id + "' is on a cycle detached from the root");
    }
  }

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const OntologyNode& node(std::size_t i) const { return nodes_.at(i); }
  const std::vector<OntologyNode>& nodes() const { return nodes_; }
  std::optional<std::size_t> root() const { return root_; }
  std::optional<std::size_t> parent(std::size_t i) const { return parent_.at(i); }
  const std::vector<std::size_t>& children(std::size_t i) const { return children_.at(i); }
  const std::vector<std::size_t>& conflicts(std::size_t i) const { return conflicts_.at(i); }
  const std::vector<std::size_t>& preorder() const { return preorder_; }
  const DialogueTexts& texts() const { return texts_; }

  std::size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw DanglingReference("unknown ontology node '" + id + "'");
    return it->second;
  }

  std::size_t decidable_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(),
                                                  [](const auto& n) { return n.kind != NodeKind::Required; }));
  }

 private:
  // Line of the `"id": "<id>"` member that defines a node, 0 if not found.
  static std::size_t line_of(const std::string& text, const std::string& id) {
    const std::string key = "\"id\"", quoted = "\"" + id + "\"";
    for (auto at = text.find(key); at != std::string::npos; at = text.find(key, at + 1)) {
      auto v = text.find_first_not_of(" \t\r\n", at + key.size());
      if (v == std::string::npos || text[v] != ':') continue;
      v = text.find_first_not_of(" \t\r\n", v + 1);
      if (v != std::string::npos && text.compare(v, quoted.size(), quoted) == 0)
        return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(v), '\n'));
    }
    return 0;
  }

  std::vector<OntologyNode> nodes_;
  DialogueTexts texts_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::vector<std::size_t>> conflicts_;
  std::vector<std::optional<std::size_t>> parent_;
  std::vector<std::size_t> preorder_;
  std::optional<std::size_t> root_;
};

inline NodeKind parse_node_kind(const std::string& s) {
  if (s == "required") return NodeKind::Required;
  if (s == "optional") return NodeKind::Optional;
  if (s == "quality_constraint") return NodeKind::QualityConstraint;
  throw ModelError("unknown node kind '" + s + "'");
}

// Document: { "texts": {...optional overrides...}, "nodes": [ {id, name,
// description, kind, children, conflicts_with, prompt, info_text}, ... ] }
inline Ontology parse_ontology(const std::string& text, const std::string& source = "<ontology>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n');
    throw ModelError(source + ":" + std::to_string(line) + ": " + e.what());
  }
  DialogueTexts texts;
  std::vector<OntologyNode> nodes;
  try {
    if (doc.contains("texts")) {
      const auto& t = doc.at("texts");
      texts.review = t.value("review", texts.review);
      texts.review_info = t.value("review_info", texts.review_info);
      texts.completion = t.value("completion", texts.completion);
      texts.farewell = t.value("farewell", texts.farewell);
      texts.clarify = t.value("clarify", texts.clarify);
      texts.confirm_prefix = t.value("confirm_prefix", texts.confirm_prefix);
    }
    for (const auto& j : doc.at("nodes")) {
      OntologyNode n;
      n.id = j.at("id").get<std::string>();
      n.name = j.value("name", n.id);
      n.description = j.value("description", "");
      n.kind = parse_node_kind(j.value("kind", "optional"));
      n.children = j.value("children", std::vector<std::string>{});
      n.conflicts_with = j.value("conflicts_with", std::vector<std::string>{});
      n.prompt = j.value("prompt", "Do you want " + n.name + "?");
      n.info_text = j.value("info_text", n.description);
      nodes.push_back(std::move(n));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(source + ": " + e.what());
  }
  return Ontology(std::move(nodes), std::move(texts), text);
}

inline Ontology load_ontology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open ontology file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_ontology(buf.str(), path);
}

// ---------------------------------------------------------------------------
// Keyword-cue interpretation

enum class DialogueObservation { Affirm = 0, Deny = 1, RequestInfo = 2, Unknown = 3, Exit = 4 };
inline constexpr std::size_t kNumObservations = 5;
using ObservationDistribution = std::array<double, kNumObservations>;

inline std::string to_string(DialogueObservation o) {
  switch (o) {
    case DialogueObservation::Affirm: return "affirm";
    case DialogueObservation::Deny: return "deny";
    case DialogueObservation::RequestInfo: return "request_info";
    case DialogueObservation::Unknown: return "unknown";
    case DialogueObservation::Exit: return "exit";
  }
  return "?";
}

struct CueSet {
  std::vector<std::string> affirm{"yes", "sure", "okay", "add", "prefer", "love", "i want", "please add", "opt in"};
  std::vector<std::string> deny{"no", "don't", "not"};
  std::vector<std::string> info{"what", "which", "how", "explain", "mean"};
  std::vector<std::string> exit{"quit", "exit"};
  // Utterances made only of these acknowledge a prompt without answering it.
  std::vector<std::string> acknowledgements{"okay", "ok", "alright"};
  double smoothing = 0.05;
};

inline const CueSet& default_cues() {
  static const CueSet cues;
  return cues;
}

namespace detail {

inline int count_phrase(const std::vector<std::string>& tokens, const std::string& phrase) {
  const auto words = tokenize(phrase);
  if (words.empty() || words.size() > tokens.size()) return 0;
  int hits = 0;
  for (std::size_t i = 0; i + words.size() <= tokens.size(); ++i)
    if (std::equal(words.begin(), words.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) ++hits;
  return hits;
}

inline int count_cues(const std::vector<std::string>& tokens, const std::vector<std::string>& cues) {
  int hits = 0;
  for (const auto& c : cues) hits += count_phrase(tokens, c);
  return hits;
}

}  // namespace detail

// Cue hits score +1 each; a question mark adds one more to a present
// information cue. A bare question word ("What?") or a bare acknowledgement
// ("Okay.") cannot be grounded and counts as Unknown, as does an utterance
// with no hits. Raw scores are smoothed additively and normalized.
inline ObservationDistribution interpret(std::string_view text, const CueSet& cues = default_cues()) {
  const auto tokens = tokenize(text);
  std::array<double, kNumObservations> raw{};
  raw[0] = detail::count_cues(tokens, cues.affirm);
  raw[1] = detail::count_cues(tokens, cues.deny);
  raw[2] = detail::count_cues(tokens, cues.info);
  raw[4] = detail::count_cues(tokens, cues.exit);
  if (raw[2] > 0 && text.find('?') != std::string_view::npos) raw[2] += 1;

  const bool bare_question = tokens.size() == 1 && raw[2] > 0;
  const bool bare_ack =
      !tokens.empty() && std::all_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
        return std::find(cues.acknowledgements.begin(), cues.acknowledgements.end(), t) != cues.acknowledgements.end();
      });
  if (bare_question || bare_ack) raw = {0, 0, 0, 1, 0};
  if (raw[0] + raw[1] + raw[2] + raw[4] == 0) raw[3] = 1;

  double total = 0.0;
  for (double r : raw) total += r + cues.smoothing;
  ObservationDistribution dist{};
  for (std::size_t i = 0; i < kNumObservations; ++i) dist[i] = (raw[i] + cues.smoothing) / total;
  return dist;
}

// Ties go to the lowest observation id.
inline DialogueObservation most_likely(const ObservationDistribution& d) {
  return static_cast<DialogueObservation>(std::max_element(d.begin(), d.end()) - d.begin());
}

// ---------------------------------------------------------------------------
// Customization walk

enum class Decision { Undecided, Accepted, Rejected };

struct Cursor {
  enum class Kind { Node, Review, Done };
  Kind kind = Kind::Done;
  std::size_t node = 0;

  friend bool operator==(const Cursor&, const Cursor&) = default;
};

struct Customization {
  std::vector<Decision> decisions;
  Cursor cursor;
  bool reviewed = false;
};

struct Prompt {
  std::string text;
  Cursor cursor;
};

namespace detail {

inline void append_sentence(std::string& out, const std::string& s) {
  if (s.empty()) return;
  if (!out.empty()) out += ' ';
  out += s;
}

inline bool ancestors_accepted(const Ontology& o, const Customization& c, std::size_t n) {
  for (auto p = o.parent(n); p; p = o.parent(*p))
    if (c.decisions[*p] != Decision::Accepted) return false;
  return true;
}

inline void accept(const Ontology& o, Customization& c, std::size_t n) {
  c.decisions[n] = Decision::Accepted;
  for (std::size_t other : o.conflicts(n))
    if (c.decisions[other] == Decision::Undecided) c.decisions[other] = Decision::Rejected;
}

}  // namespace detail

// Advances to the next undecided node whose ancestors are all accepted, in
// depth-first order. Required nodes are accepted on the way and announced.
// With every node decided, the walk asks for a final review and then
// completes; an ontology with nothing to decide completes immediately.
inline Prompt next_prompt(const Ontology& o, Customization& c) {
  std::string text;
  for (std::size_t n : o.preorder()) {
    if (c.decisions[n] != Decision::Undecided || !detail::ancestors_accepted(o, c, n)) continue;
    const auto& node = o.node(n);
    if (node.kind == NodeKind::Required) {
      detail::accept(o, c, n);
      detail::append_sentence(text, node.prompt);
      continue;
    }
    c.cursor = {Cursor::Kind::Node, n};
    detail::append_sentence(text, node.prompt);
    return {text, c.cursor};
  }
  if (!c.reviewed && o.decidable_count() > 0) {
    c.cursor = {Cursor::Kind::Review, 0};
    detail::append_sentence(text, o.texts().review);
  } else {
    c.reviewed = true;
    c.cursor = {Cursor::Kind::Done, 0};
    detail::append_sentence(text, o.texts().completion);
  }
  return {text, c.cursor};
}

inline Prompt start_customization(const Ontology& o, Customization& c) {
  c.decisions.assign(o.size(), Decision::Undecided);
  c.reviewed = false;
  c.cursor = {};
  return next_prompt(o, c);
}

// Records the user's answer to the current prompt and returns the next one.
// Accepting a node rejects every undecided node it conflicts with; rejecting
// a node skips its subtree. Either answer closes the review.
inline Prompt decide(const Ontology& o, Customization& c, bool accept) {
  switch (c.cursor.kind) {
    case Cursor::Kind::Node:
      if (accept) {
        detail::accept(o, c, c.cursor.node);
      } else {
        c.decisions[c.cursor.node] = Decision::Rejected;
      }
      break;
    case Cursor::Kind::Review: c.reviewed = true; break;
    case Cursor::Kind::Done: return {o.texts().completion, c.cursor};
  }
  return next_prompt(o, c);
}

// Text of the question currently awaiting an answer.
inline std::string current_question(const Ontology& o, const Customization& c) {
  switch (c.cursor.kind) {
    case Cursor::Kind::Node: return o.node(c.cursor.node).prompt;
    case Cursor::Kind::Review: return o.texts().review;
    case Cursor::Kind::Done: return o.texts().completion;
  }
  return {};
}

inline std::string current_info(const Ontology& o, const Customization& c) {
  switch (c.cursor.kind) {
    case Cursor::Kind::Node: return o.node(c.cursor.node).info_text;
    case Cursor::Kind::Review: return o.texts().review_info;
    case Cursor::Kind::Done: return o.texts().completion;
  }
  return {};
}

}  // namespace pdm
