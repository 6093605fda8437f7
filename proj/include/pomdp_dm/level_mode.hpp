#pragma once

#include <array>
#include <string>
#include <string_view>

#include "pomdp_dm/errors.hpp"

namespace pdm {

enum class KnowledgeLevel { Expert = 0, Professional = 1, Amateur = 2, Novice = 3 };
enum class ControlMode { Strategic = 0, Tactical = 1, Opportunistic = 2, Scrambled = 3 };

inline constexpr std::array kAllLevels{KnowledgeLevel::Expert, KnowledgeLevel::Professional, KnowledgeLevel::Amateur,
                                       KnowledgeLevel::Novice};
inline constexpr std::array kAllModes{ControlMode::Strategic, ControlMode::Tactical, ControlMode::Opportunistic,
                                      ControlMode::Scrambled};

inline std::string to_string(KnowledgeLevel k) {
  switch (k) {
    case KnowledgeLevel::Expert: return "expert";
    case KnowledgeLevel::Professional: return "professional";
    case KnowledgeLevel::Amateur: return "amateur";
    case KnowledgeLevel::Novice: return "novice";
  }
  return "?";
}

inline std::string to_string(ControlMode m) {
  switch (m) {
    case ControlMode::Strategic: return "strategic";
    case ControlMode::Tactical: return "tactical";
    case ControlMode::Opportunistic: return "opportunistic";
    case ControlMode::Scrambled: return "scrambled";
  }
  return "?";
}

inline KnowledgeLevel parse_level(std::string_view s) {
  for (auto k : kAllLevels)
    if (to_string(k) == s) return k;
  throw ModelError("unknown knowledge level '" + std::string(s) + "'");
}

// Quartile bands of the ncp ratio, half-open with the top band closed at 1.
inline KnowledgeLevel classify_level(double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw OutOfRange("ncp ratio must lie in [0, 1]");
  if (ratio < 0.25) return KnowledgeLevel::Expert;
  if (ratio < 0.50) return KnowledgeLevel::Professional;
  if (ratio < 0.75) return KnowledgeLevel::Amateur;
  return KnowledgeLevel::Novice;
}

inline ControlMode select_mode(KnowledgeLevel k) { return static_cast<ControlMode>(static_cast<int>(k)); }

}  // namespace pdm
