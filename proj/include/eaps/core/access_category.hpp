#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace eaps {

/// 802.11e access categories. The underlying value orders them by priority,
/// so `VO > VI > BE > BK` holds with the built-in comparison operators.
enum class AccessCategory : std::uint8_t { BK = 0, BE = 1, VI = 2, VO = 3 };

inline constexpr std::size_t kNumAcs = 4;

/// Highest priority first; this is the column order used by every per-AC
/// feature block (vo, vi, be, bk).
inline constexpr std::array<AccessCategory, kNumAcs> kAcsByPriority = {
    AccessCategory::VO, AccessCategory::VI, AccessCategory::BE, AccessCategory::BK};

constexpr std::size_t index_of(AccessCategory ac) { return static_cast<std::size_t>(ac); }

/// Position of `ac` within kAcsByPriority (VO -> 0, BK -> 3).
constexpr std::size_t priority_rank(AccessCategory ac) { return 3 - index_of(ac); }

constexpr std::string_view to_string(AccessCategory ac) {
  switch (ac) {
    case AccessCategory::VO: return "VO";
    case AccessCategory::VI: return "VI";
    case AccessCategory::BE: return "BE";
    case AccessCategory::BK: return "BK";
  }
  return "?";
}

std::optional<AccessCategory> parse_access_category(std::string_view text);

/// Standard 802.11e user-priority table applied to the IP ToS precedence bits.
constexpr AccessCategory ac_from_tos(int tos) {
  switch (tos & 7) {
    case 6:
    case 7: return AccessCategory::VO;
    case 4:
    case 5: return AccessCategory::VI;
    case 1:
    case 2: return AccessCategory::BK;
    default: return AccessCategory::BE;
  }
}

}  // namespace eaps
