#pragma once

// Oracles and fixtures shared by the unit tests and the acceptance binary.
// Nothing here calls into the code under test except to build inputs.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pomdp_dm/pomdp.hpp"
#include "pomdp_dm/rng.hpp"

namespace testsupport {

inline std::string assets_dir() { return POMDP_DM_ASSETS_DIR; }
inline std::string data_dir() { return POMDP_DM_TEST_DATA; }

// Random distribution of length n; roughly a third of the entries are zero.
inline std::vector<double> random_simplex(pdm::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  double total = 0.0;
  for (auto& x : v) {
    x = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    total += x;
  }
  if (total == 0.0) {
    v[rng.index(n)] = 1.0;
    total = 1.0;
  }
  for (auto& x : v) x /= total;
  return v;
}

inline pdm::PomdpModel::Tables random_tables(pdm::Rng& rng, std::size_t ns, std::size_t na, std::size_t no) {
  pdm::PomdpModel::Tables t;
  for (std::size_t i = 0; i < ns; ++i) t.states.push_back("s" + std::to_string(i));
  for (std::size_t i = 0; i < na; ++i) t.actions.push_back("a" + std::to_string(i));
  for (std::size_t i = 0; i < no; ++i) t.observations.push_back("o" + std::to_string(i));
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t s = 0; s < ns; ++s)
      for (double p : random_simplex(rng, ns)) t.transition.push_back(p);
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t s = 0; s < ns; ++s)
      for (double p : random_simplex(rng, no)) t.observation.push_back(p);
  t.discount = 0.9;
  return t;
}

// Unnormalized posterior mass straight from the raw tables, summed in the
// opposite loop order to the library; nullopt when every mass is zero.
inline std::optional<std::vector<double>> brute_force_update(const pdm::PomdpModel::Tables& t,
                                                             const std::vector<double>& b, std::size_t a,
                                                             std::size_t o) {
  const std::size_t ns = t.states.size(), no = t.observations.size();
  std::vector<double> mass(ns, 0.0);
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t s2 = 0; s2 < ns; ++s2)
      mass[s2] += t.observation[(a * ns + s2) * no + o] * t.transition[(a * ns + s) * ns + s2] * b[s];
  double z = 0.0;
  for (double m : mass) z += m;
  if (z == 0.0) return std::nullopt;
  for (double& m : mass) m /= z;
  return mass;
}

// Deterministic chain 0 -> 1 -> ... -> n-1 (terminal). Action 0 moves left
// (clamped at 0), action 1 moves right; entering the terminal pays 1.
struct Chain {
  std::size_t n = 3;
  std::pair<std::size_t, double> step(std::size_t s, std::size_t a) const {
    const std::size_t next = a == 1 ? s + 1 : (s == 0 ? 0 : s - 1);
    return {next, next == n - 1 ? 1.0 : 0.0};
  }
  bool terminal(std::size_t s) const { return s == n - 1; }
};

// Value iteration on Q for the chain, iterated to a fixed point.
inline std::vector<std::vector<double>> chain_q_oracle(const Chain& c, double gamma) {
  std::vector<std::vector<double>> q(c.n, std::vector<double>(2, 0.0));
  for (int it = 0; it < 10000; ++it) {
    double delta = 0.0;
    for (std::size_t s = 0; s < c.n; ++s) {
      if (c.terminal(s)) continue;
      for (std::size_t a = 0; a < 2; ++a) {
        const auto [next, r] = c.step(s, a);
        const double v = c.terminal(next) ? 0.0 : std::max(q[next][0], q[next][1]);
        const double nq = r + gamma * v;
        delta = std::max(delta, std::abs(nq - q[s][a]));
        q[s][a] = nq;
      }
    }
    if (delta == 0.0) break;
  }
  return q;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

inline std::vector<std::string> book_portal_transcript() {
  return read_lines(assets_dir() + "/transcripts/book_portal.txt");
}

struct SentimentFixture {
  std::string utterance;
  double reference_compound = 0.0;
};

inline std::vector<SentimentFixture> book_portal_sentiment() {
  std::vector<SentimentFixture> out;
  for (const auto& line : read_lines(data_dir() + "/book_portal_sentiment.tsv")) {
    if (line[0] == '#') continue;
    const auto tab = line.find('\t');
    out.push_back({line.substr(0, tab), std::stod(line.substr(tab + 1))});
  }
  return out;
}

// Reference class from a printed compound, cutoffs +-0.05.
inline int reference_class(double compound) {
  if (compound >= 0.05) return 2;
  if (compound <= -0.05) return 0;
  return 1;
}

// Expected outcome of the book portal transcript for each named feature.
inline const std::vector<std::pair<std::string, bool>>& book_portal_outcomes() {
  static const std::vector<std::pair<std::string, bool>> v{
      {"get-detailed-info", true}, {"sort-books", true},   {"advanced-search", true},
      {"broad-match", false},      {"exact-match", true},  {"manage-cart", true},
      {"payment-gateway", true},   {"get-summary", true},  {"set-delivery-address", true}};
  return v;
}

}  // namespace testsupport
