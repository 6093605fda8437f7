#pragma once

// Append-only belief-state history with rule-based validation and rollback.

#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pomdp_dm/pomdp.hpp"

namespace pdm {

struct HistoryEntry {
  int turn = 0;
  Belief belief;
  std::optional<ActionId> action;
  std::optional<ObservationId> observation;
  bool accepted = true;
};

struct ValidationRule {
  std::string description;
  std::function<bool(const Belief& previous, const Belief& candidate, ObservationId o)> predicate;
};

struct ValidationOutcome {
  bool accepted = false;
  Belief effective;
  std::string failed_rule;  // empty when accepted
};

struct PlanningView {
  Belief current;
  std::vector<Belief> prior;  // oldest first, excludes current
};

// Scalar fed to trend analysis: confidence in the top hypothesis.
inline double scalarize(const Belief& b) { return b.max_prob(); }

class BeliefHistory {
 public:
  explicit BeliefHistory(Belief initial) { entries_.push_back({0, std::move(initial), std::nullopt, std::nullopt, true}); }

  std::size_t size() const { return entries_.size(); }
  std::size_t committed_len() const { return entries_.size(); }
  const std::vector<HistoryEntry>& entries() const { return entries_; }
  const Belief& current() const { return entries_.back().belief; }

  // Commits one entry; turns increase by one per append.
  void append(Belief b, std::optional<ActionId> a, std::optional<ObservationId> o, bool accepted = true) {
    entries_.push_back({entries_.back().turn + 1, std::move(b), a, o, accepted});
  }

  // A missing candidate means the update was degenerate; it always fails.
  // Never mutates the history.
  ValidationOutcome validate_or_rollback(std::span<const ValidationRule> rules, const std::optional<Belief>& candidate,
                                         ObservationId o) const {
    const Belief& previous = current();
    if (!candidate) return {false, previous, "degenerate observation"};
    for (const auto& rule : rules)
      if (!rule.predicate(previous, *candidate, o)) return {false, previous, rule.description};
    return {true, *candidate, {}};
  }

  PlanningView planning_view() const {
    PlanningView view{current(), {}};
    view.prior.reserve(entries_.size() - 1);
    for (std::size_t i = 0; i + 1 < entries_.size(); ++i) view.prior.push_back(entries_[i].belief);
    return view;
  }

  std::vector<double> scalarized() const {
    std::vector<double> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(scalarize(e.belief));
    return out;
  }

 private:
  std::vector<HistoryEntry> entries_;
};

inline nlohmann::json to_json(const HistoryEntry& e, const PomdpModel& m) {
  nlohmann::json j;
  j["turn"] = e.turn;
  j["belief_scalar"] = scalarize(e.belief);
  j["belief"] = std::vector<double>(e.belief.probs().begin(), e.belief.probs().end());
  j["action"] = e.action ? nlohmann::json(m.actions().at(e.action->value)) : nlohmann::json(nullptr);
  j["observation"] = e.observation ? nlohmann::json(m.observations().at(e.observation->value)) : nlohmann::json(nullptr);
  j["accepted"] = e.accepted;
  return j;
}

// JSON Lines transcript, one committed entry per line.
inline void write_jsonl(std::ostream& out, const BeliefHistory& h, const PomdpModel& m) {
  for (const auto& e : h.entries()) out << to_json(e, m).dump() << '\n';
}

}  // namespace pdm
