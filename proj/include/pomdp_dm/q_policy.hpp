#pragma once

// Tabular Q-learning with epsilon-greedy action selection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pomdp_dm/errors.hpp"
#include "pomdp_dm/pomdp.hpp"
#include "pomdp_dm/rng.hpp"

namespace pdm {

struct QConfig {
  double alpha = 0.001;
  double gamma = 0.9;
  double epsilon0 = 1.0;
  double epsilon_decay = 0.995;
  double epsilon_min = 0.01;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ModelError("alpha must lie in (0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ModelError("gamma must lie in [0, 1)");
    if (!(epsilon0 >= 0.0 && epsilon0 <= 1.0)) throw ModelError("epsilon0 must lie in [0, 1]");
    if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw ModelError("epsilon_decay must lie in (0, 1]");
    if (!(epsilon_min >= 0.0 && epsilon_min <= epsilon0)) throw ModelError("epsilon_min must lie in [0, epsilon0]");
  }

  // Exploration rate after `episodes` completed episodes.
  double epsilon_after(int episodes) const {
    return std::max(epsilon_min, epsilon0 * std::pow(epsilon_decay, episodes));
  }
};

class QTable {
 public:
  QTable() = default;
  QTable(std::size_t num_states, std::size_t num_actions, double init = 0.0)
      : states_(num_states), actions_(num_actions), values_(num_states * num_actions, init) {
    if (num_states == 0 || num_actions == 0) throw ModelError("Q-table needs at least one state and one action");
  }

  std::size_t num_states() const { return states_; }
  std::size_t num_actions() const { return actions_; }

  double& at(std::size_t s, ActionId a) {
    check(s, a);
    return values_[s * actions_ + a.value];
  }
  double at(std::size_t s, ActionId a) const {
    check(s, a);
    return values_[s * actions_ + a.value];
  }
  std::span<const double> row(std::size_t s) const {
    check(s, ActionId(0));
    return std::span<const double>(values_).subspan(s * actions_, actions_);
  }
  std::span<const double> values() const { return values_; }

  // argmax over the row; ties go to the lowest action id.
  ActionId greedy(std::size_t s) const {
    auto r = row(s);
    return ActionId(static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin()));
  }
  double max_value(std::size_t s) const {
    auto r = row(s);
    return *std::max_element(r.begin(), r.end());
  }

  friend bool operator==(const QTable&, const QTable&) = default;

  // Checkpoint: "# qtable v1 <states> <actions>" header, then
  // state_id,action_id,value rows.
  void save_csv(std::ostream& out) const {
    out << "# qtable v1 " << states_ << ' ' << actions_ << '\n';
    out << "state_id,action_id,value\n";
    out << std::setprecision(17);
    for (std::size_t s = 0; s < states_; ++s)
      for (std::size_t a = 0; a < actions_; ++a) out << s << ',' << a << ',' << values_[s * actions_ + a] << '\n';
  }

  static QTable load_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ModelError("empty Q-table checkpoint");
    std::istringstream header(line);
    std::string hash, tag, version;
    std::size_t ns = 0, na = 0;
    if (!(header >> hash >> tag >> version >> ns >> na) || hash != "#" || tag != "qtable" || version != "v1")
      throw ModelError("Q-table checkpoint: bad header '" + line + "'");
    QTable q(ns, na);
    std::getline(in, line);  // column names
    int line_no = 2;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream row(line);
      std::size_t s = 0, a = 0;
      double v = 0.0;
      char c1 = 0, c2 = 0;
      if (!(row >> s >> c1 >> a >> c2 >> v) || c1 != ',' || c2 != ',' || s >= ns || a >= na || !std::isfinite(v))
        throw ModelError("Q-table checkpoint line " + std::to_string(line_no) + ": malformed row");
      q.values_[s * na + a] = v;
    }
    return q;
  }

 private:
  void check(std::size_t s, ActionId a) const {
    if (s >= states_ || a.value >= actions_) throw OutOfRange("Q-table index out of range");
  }

  std::size_t states_ = 0;
  std::size_t actions_ = 0;
  std::vector<double> values_;
};

// One uniform draw decides explore/exploit; exploring draws a second index.
inline ActionId choose_action(const QTable& q, std::size_t s, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw OutOfRange("epsilon must lie in [0, 1]");
  if (rng.uniform() < epsilon) return ActionId(rng.index(q.num_actions()));
  return q.greedy(s);
}

// Q(s,a) <- Q(s,a) + alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))
inline void update_q(QTable& q, std::size_t s, ActionId a, double r, std::size_t s_next, const QConfig& cfg) {
  const double target = r + cfg.gamma * q.max_value(s_next);
  double& cell = q.at(s, a);
  cell += cfg.alpha * (target - cell);
}

// Terminal transition: no bootstrap term.
inline void update_q_terminal(QTable& q, std::size_t s, ActionId a, double r, const QConfig& cfg) {
  double& cell = q.at(s, a);
  cell += cfg.alpha * (r - cell);
}

inline double episode_return(std::span<const double> rewards, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw OutOfRange("gamma must lie in [0, 1)");
  return discounted_return(rewards, gamma);
}

}  // namespace pdm
