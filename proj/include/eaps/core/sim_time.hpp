#pragma once

#include <cstdint>

namespace eaps {

/// Simulation time in integer microseconds since the start of a run.
using SimTime = std::int64_t;
/// Signed span between two SimTime values, in microseconds.
using Duration = std::int64_t;

inline constexpr Duration kMicrosecond = 1;
inline constexpr Duration kMillisecond = 1000;
inline constexpr Duration kSecond = 1000 * kMillisecond;

constexpr double to_ms(Duration d) { return static_cast<double>(d) / 1000.0; }
constexpr double to_seconds(Duration d) { return static_cast<double>(d) / 1e6; }
constexpr Duration from_ms(double ms) { return static_cast<Duration>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5)); }

}  // namespace eaps
