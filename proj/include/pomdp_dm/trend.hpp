#pragma once

// Multi-level orthonormal Haar DWT over the scalarized belief history, and
// sharp-variation-point (zero crossing) counting on the detail coefficients.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pomdp_dm/errors.hpp"

namespace pdm {

struct DwtLevel {
  std::vector<double> approx;
  std::vector<double> detail;
};

struct DwtResult {
  std::vector<DwtLevel> levels;  // finest first; the last level has length 1
  std::size_t original_len = 0;
  std::size_t padded_len = 0;
};

struct TrendResult {
  int ncp = 0;
  double ncp_ratio = 0.0;
  DwtResult dwt;
};

inline constexpr double kZeroDetail = 1e-12;

// Right-pads to the next power of two by repeating the final sample.
inline std::vector<double> pad_to_power_of_two(std::span<const double> signal) {
  std::size_t n = 2;
  while (n < signal.size()) n *= 2;
  std::vector<double> out(signal.begin(), signal.end());
  out.resize(n, signal.back());
  return out;
}

inline DwtResult haar_dwt(std::span<const double> signal) {
  if (signal.size() < 2) throw InsufficientHistory("Haar transform needs at least 2 samples");
  static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  DwtResult out;
  out.original_len = signal.size();
  std::vector<double> work = pad_to_power_of_two(signal);
  out.padded_len = work.size();
  while (work.size() > 1) {
    DwtLevel level;
    const std::size_t half = work.size() / 2;
    level.approx.resize(half);
    level.detail.resize(half);
    for (std::size_t i = 0; i < half; ++i) {
      level.approx[i] = (work[2 * i] + work[2 * i + 1]) * inv_sqrt2;
      level.detail[i] = (work[2 * i] - work[2 * i + 1]) * inv_sqrt2;
    }
    work = level.approx;
    out.levels.push_back(std::move(level));
  }
  return out;
}

// Reconstructs the padded signal from the deepest approximation and all details.
inline std::vector<double> inverse_haar(const DwtResult& dwt) {
  if (dwt.levels.empty()) return {};
  static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  std::vector<double> work = dwt.levels.back().approx;
  for (auto it = dwt.levels.rbegin(); it != dwt.levels.rend(); ++it) {
    std::vector<double> up(work.size() * 2);
    for (std::size_t i = 0; i < work.size(); ++i) {
      up[2 * i] = (work[i] + it->detail[i]) * inv_sqrt2;
      up[2 * i + 1] = (work[i] - it->detail[i]) * inv_sqrt2;
    }
    work = std::move(up);
  }
  return work;
}

// Strict sign changes between consecutive detail coefficients, summed over
// levels. Coefficients with |d| < kZeroDetail carry no sign and are skipped.
inline int count_sharp_points(const DwtResult& dwt) {
  int count = 0;
  for (const auto& level : dwt.levels) {
    int last_sign = 0;
    for (double d : level.detail) {
      if (std::abs(d) < kZeroDetail) continue;
      const int sign = d > 0.0 ? 1 : -1;
      if (last_sign != 0 && sign != last_sign) ++count;
      last_sign = sign;
    }
  }
  return count;
}

inline int max_crossings(const DwtResult& dwt) {
  int total = 0;
  for (const auto& level : dwt.levels)
    if (level.detail.size() > 1) total += static_cast<int>(level.detail.size()) - 1;
  return total;
}

inline double ncp_ratio(int ncp, const DwtResult& dwt) {
  const int max = max_crossings(dwt);
  if (max == 0) return 0.0;
  if (ncp < 0 || ncp > max) throw OutOfRange("ncp exceeds the possible crossings");
  return static_cast<double>(ncp) / static_cast<double>(max);
}

inline TrendResult analyze_trend(std::span<const double> signal) {
  TrendResult r;
  r.dwt = haar_dwt(signal);
  r.ncp = count_sharp_points(r.dwt);
  r.ncp_ratio = ncp_ratio(r.ncp, r.dwt);
  return r;
}

}  // namespace pdm
