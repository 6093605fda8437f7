#pragma once

// POMDP model (S, A, T, R, Omega, O, gamma), belief states and the exact
// Bayesian belief update.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <fstream>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pomdp_dm/errors.hpp"

namespace pdm {

template <typename Tag>
struct Index {
  std::size_t value = 0;

  constexpr Index() = default;
  constexpr explicit Index(std::size_t v) : value(v) {}
  friend constexpr auto operator<=>(Index, Index) = default;
};

using StateId = Index<struct StateTag>;
using ActionId = Index<struct ActionTag>;
using ObservationId = Index<struct ObservationTag>;

inline constexpr double kSimplexTolerance = 1e-9;

class Belief {
 public:
  Belief() = default;

  // Validates the simplex within kSimplexTolerance and renormalizes exactly.
  explicit Belief(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw ModelError("belief over an empty state set");
    double total = 0.0;
    for (double p : probs_) {
      if (!std::isfinite(p) || p < 0.0)
        throw ModelError("belief entries must be finite and non-negative");
      total += p;
    }
    if (std::abs(total - 1.0) > kSimplexTolerance)
      throw ModelError("belief does not sum to 1 (sum = " + std::to_string(total) + ")");
    for (double& p : probs_) p /= total;
  }

  static Belief uniform(std::size_t n) { return Belief(std::vector<double>(n, 1.0 / static_cast<double>(n))); }

  static Belief point_mass(std::size_t n, StateId s) {
    std::vector<double> p(n, 0.0);
    p.at(s.value) = 1.0;
    return Belief(std::move(p));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](StateId s) const { return probs_[s.value]; }
  std::span<const double> probs() const { return probs_; }

  // Most probable state; ties go to the lowest index.
  StateId top() const {
    return StateId(static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin()));
  }
  double max_prob() const { return *std::max_element(probs_.begin(), probs_.end()); }

  friend bool operator==(const Belief&, const Belief&) = default;

 private:
  std::vector<double> probs_;
};

// Dense tabular POMDP. Immutable after construction.
class PomdpModel {
 public:
  struct Tables {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<std::string> observations;
    std::vector<double> transition;   // [a][s][s']
    std::vector<double> observation;  // [a][s'][o]
    std::vector<double> reward;       // [s][a][s'], may be empty (all zero)
    double discount = 0.9;
  };

  PomdpModel() = default;

  explicit PomdpModel(Tables t) : t_(std::move(t)) {
    const std::size_t ns = t_.states.size(), na = t_.actions.size(), no = t_.observations.size();
    if (ns == 0 || na == 0 || no == 0) throw ModelError("model needs at least one state, action and observation");
    if (!(t_.discount >= 0.0 && t_.discount < 1.0)) throw ModelError("discount must lie in [0, 1)");
    if (t_.transition.size() != na * ns * ns) throw ModelError("transition table has wrong size");
    if (t_.observation.size() != na * ns * no) throw ModelError("observation table has wrong size");
    if (t_.reward.empty()) t_.reward.assign(ns * na * ns, 0.0);
    if (t_.reward.size() != ns * na * ns) throw ModelError("reward table has wrong size");

    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t s = 0; s < ns; ++s) {
        normalize_row(std::span<double>(t_.transition).subspan((a * ns + s) * ns, ns),
                      "T(.|" + t_.states[s] + "," + t_.actions[a] + ")");
        normalize_row(std::span<double>(t_.observation).subspan((a * ns + s) * no, no),
                      "O(.|" + t_.states[s] + "," + t_.actions[a] + ")");
      }
    }
    for (double r : t_.reward)
      if (!std::isfinite(r)) throw ModelError("reward entries must be finite");
    index(state_index_, t_.states, "state");
    index(action_index_, t_.actions, "action");
    index(observation_index_, t_.observations, "observation");
  }

  std::size_t num_states() const { return t_.states.size(); }
  std::size_t num_actions() const { return t_.actions.size(); }
  std::size_t num_observations() const { return t_.observations.size(); }
  double discount() const { return t_.discount; }

  const std::vector<std::string>& states() const { return t_.states; }
  const std::vector<std::string>& actions() const { return t_.actions; }
  const std::vector<std::string>& observations() const { return t_.observations; }
  const Tables& tables() const { return t_; }

  double transition(StateId s, ActionId a, StateId next) const {
    return t_.transition[(a.value * num_states() + s.value) * num_states() + next.value];
  }
  double observation(StateId next, ActionId a, ObservationId o) const {
    return t_.observation[(a.value * num_states() + next.value) * num_observations() + o.value];
  }
  double reward(StateId s, ActionId a, StateId next) const {
    return t_.reward[(s.value * num_actions() + a.value) * num_states() + next.value];
  }

  StateId state(const std::string& label) const { return StateId(lookup(state_index_, label, "state")); }
  ActionId action(const std::string& label) const { return ActionId(lookup(action_index_, label, "action")); }
  ObservationId observation_id(const std::string& label) const {
    return ObservationId(lookup(observation_index_, label, "observation"));
  }

  void check(StateId s) const {
    if (s.value >= num_states()) throw OutOfRange("state id out of range");
  }
  void check(ActionId a) const {
    if (a.value >= num_actions()) throw OutOfRange("action id out of range");
  }
  void check(ObservationId o) const {
    if (o.value >= num_observations()) throw OutOfRange("observation id out of range");
  }

 private:
  static void normalize_row(std::span<double> row, const std::string& what) {
    double total = 0.0;
    for (double p : row) {
      if (!std::isfinite(p) || p < 0.0) throw ModelError(what + " has a negative or non-finite entry");
      total += p;
    }
    if (std::abs(total - 1.0) > kSimplexTolerance)
      throw ModelError(what + " sums to " + std::to_string(total) + ", expected 1");
    for (double& p : row) p /= total;
  }

  static void index(std::unordered_map<std::string, std::size_t>& out, const std::vector<std::string>& labels,
                    const char* kind) {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (!out.emplace(labels[i], i).second) throw ModelError(std::string("duplicate ") + kind + " '" + labels[i] + "'");
  }

  static std::size_t lookup(const std::unordered_map<std::string, std::size_t>& m, const std::string& label,
                            const char* kind) {
    auto it = m.find(label);
    if (it == m.end()) throw ModelError(std::string("unknown ") + kind + " '" + label + "'");
    return it->second;
  }

  Tables t_;
  std::unordered_map<std::string, std::size_t> state_index_, action_index_, observation_index_;
};

// Pr(o | b, a) = sum_{s'} O(o|s',a) sum_s T(s'|s,a) b(s)
inline double observation_likelihood(const PomdpModel& m, const Belief& b, ActionId a, ObservationId o) {
  m.check(a);
  m.check(o);
  if (b.size() != m.num_states()) throw ModelError("belief size does not match the model");
  double total = 0.0;
  for (std::size_t next = 0; next < m.num_states(); ++next) {
    double predicted = 0.0;
    for (std::size_t s = 0; s < m.num_states(); ++s) predicted += m.transition(StateId(s), a, StateId(next)) * b[StateId(s)];
    total += m.observation(StateId(next), a, o) * predicted;
  }
  return total;
}

// b'(s') = eta * O(o|s',a) * sum_s T(s'|s,a) b(s)
inline Belief update_belief(const PomdpModel& m, const Belief& b, ActionId a, ObservationId o) {
  m.check(a);
  m.check(o);
  if (b.size() != m.num_states()) throw ModelError("belief size does not match the model");
  const std::size_t n = m.num_states();
  std::vector<double> next(n, 0.0);
  double norm = 0.0;
  for (std::size_t s2 = 0; s2 < n; ++s2) {
    double predicted = 0.0;
    for (std::size_t s = 0; s < n; ++s) predicted += m.transition(StateId(s), a, StateId(s2)) * b[StateId(s)];
    next[s2] = m.observation(StateId(s2), a, o) * predicted;
    norm += next[s2];
  }
  if (!(norm > 0.0))
    throw DegenerateObservation("observation '" + m.observations()[o.value] + "' has zero likelihood after action '" +
                                m.actions()[a.value] + "'");
  for (double& p : next) p /= norm;
  return Belief(std::move(next));
}

// sum_t gamma^t * rewards[t] over a truncated horizon.
inline double discounted_return(std::span<const double> rewards, double gamma) {
  double total = 0.0, weight = 1.0;
  for (double r : rewards) {
    total += weight * r;
    weight *= gamma;
  }
  return total;
}

using PolicyFn = std::function<ActionId(const Belief&)>;

// Model document:
// {
//   "states": [...], "actions": [...], "observations": [...], "discount": 0.9,
//   "transition":  { action|"*": { state: { next_state: p } } },
//   "observation": { action|"*": { next_state: { observation: p } } },
//   "reward":      { action|"*": { state: { next_state: r } } }      (optional)
// }
// Omitted entries are zero. An explicit action key overrides "*".
inline PomdpModel model_from_json(const nlohmann::json& doc) {
  PomdpModel::Tables t;
  try {
    t.states = doc.at("states").get<std::vector<std::string>>();
    t.actions = doc.at("actions").get<std::vector<std::string>>();
    t.observations = doc.at("observations").get<std::vector<std::string>>();
    t.discount = doc.value("discount", 0.9);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("model document: ") + e.what());
  }
  auto position = [](const std::vector<std::string>& labels, const std::string& key, const char* kind) {
    auto it = std::find(labels.begin(), labels.end(), key);
    if (it == labels.end()) throw ModelError(std::string("model document: unknown ") + kind + " '" + key + "'");
    return static_cast<std::size_t>(it - labels.begin());
  };
  const std::size_t na = t.actions.size();

  // Fills dst[a][row][col] from a nested {action: {row: {col: value}}} table.
  auto fill = [&](const char* key, std::vector<double>& dst, const std::vector<std::string>& rows,
                  const std::vector<std::string>& cols, const char* row_kind, const char* col_kind, bool action_major) {
    const std::size_t nr = rows.size(), nc = cols.size();
    dst.assign(na * nr * nc, 0.0);
    if (!doc.contains(key)) return;
    const auto& table = doc.at(key);
    if (!table.is_object()) throw ModelError(std::string("model document: '") + key + "' must be an object");
    auto write = [&](std::size_t a, const nlohmann::json& body) {
      for (auto& [rk, row] : body.items()) {
        const std::size_t r = position(rows, rk, row_kind);
        for (auto& [ck, v] : row.items()) {
          const std::size_t c = position(cols, ck, col_kind);
          if (!v.is_number()) throw ModelError(std::string("model document: non-numeric entry in '") + key + "'");
          const std::size_t at = action_major ? (a * nr + r) * nc + c : (r * na + a) * nc + c;
          dst[at] = v.get<double>();
        }
      }
    };
    if (table.contains("*"))
      for (std::size_t a = 0; a < na; ++a) write(a, table.at("*"));
    for (auto& [ak, body] : table.items()) {
      if (ak == "*") continue;
      const std::size_t a = position(t.actions, ak, "action");
      // An explicit action table replaces the wildcard rows it names.
      for (auto& [rk, row] : body.items()) {
        const std::size_t r = position(rows, rk, row_kind);
        for (std::size_t c = 0; c < nc; ++c) dst[action_major ? (a * nr + r) * nc + c : (r * na + a) * nc + c] = 0.0;
      }
      write(a, body);
    }
  };
  fill("transition", t.transition, t.states, t.states, "state", "state", true);
  fill("observation", t.observation, t.states, t.observations, "state", "observation", true);
  fill("reward", t.reward, t.states, t.states, "state", "state", false);
  return PomdpModel(std::move(t));
}

inline PomdpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(path + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace pdm
