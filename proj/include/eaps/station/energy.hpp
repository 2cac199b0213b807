#pragma once

#include <array>
#include <cstdint>
#include <cstddef>

#include "eaps/core/sim_time.hpp"

namespace eaps {

enum class PowerMode : std::uint8_t { sleep = 0, idle, rx, tx };

struct PowerStateTable {
  double sleep_mw = 1.5;
  double idle_mw = 120.0;
  double rx_mw = 180.0;
  double tx_mw = 320.0;
  /// Sleep-to-awake and awake-to-sleep latency, billed at idle power.
  Duration transition_us = 250;

  double power_mw(PowerMode m) const;
  /// Throws std::invalid_argument unless sleep < idle <= rx <= tx and the
  /// transition latency is non-negative.
  void validate() const;
  PowerStateTable scaled(double c) const;
};

/// Integrates radio power over time, in microjoules (mW x us / 1000).
class EnergyMeter {
 public:
  explicit EnergyMeter(PowerStateTable table);

  /// Adds power(mode) x duration and returns the increment.
  double accumulate(PowerMode mode, Duration duration_us);
  /// Bills the time spent in the current mode up to `now` and switches.
  void set_mode(PowerMode mode, SimTime now);
  /// Moves `duration_us` already billed (or to be billed) as `from` to `to`.
  void reclassify(PowerMode from, PowerMode to, Duration duration_us);

  PowerMode mode() const { return mode_; }
  /// Energy billed so far plus the open interval in the current mode.
  double total_uj(SimTime now) const;
  Duration time_in(PowerMode m) const { return time_in_[static_cast<std::size_t>(m)]; }
  const PowerStateTable& table() const { return table_; }

 private:
  PowerStateTable table_;
  PowerMode mode_ = PowerMode::idle;
  SimTime since_ = 0;
  double billed_uj_ = 0.0;
  std::array<Duration, 4> time_in_{};
};

}  // namespace eaps
