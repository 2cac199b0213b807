#pragma once

#include "eaps/core/rng.hpp"
#include "eaps/core/simulator.hpp"
#include "eaps/medium/channel.hpp"

namespace eaps {

/// Nearby non-associated devices (other BSSs, Bluetooth, ZigBee) lumped into
/// one on/off process. On periods are exponential with `mean_on_us`; off
/// periods are exponential with the mean that yields `airtime_fraction`.
struct InterfererProfile {
  Duration mean_on_us = 2 * kMillisecond;
  double airtime_fraction = 0.0;  // in [0, 1)
  double excursion_db = 0.0;

  void validate() const;
  Duration mean_off_us() const;
};

class Interferer {
 public:
  Interferer(Simulator& sim, Channel& channel, RandomStream stream, InterfererProfile profile);

  /// Schedules the first toggle. Does nothing for a zero airtime fraction.
  void start();

  /// Advances the on/off process by one toggle: from off, requests a burst on
  /// the channel; from on, draws the next off period. Returns true while on.
  bool step();

  bool on() const { return on_; }
  Duration requested_on_us() const { return requested_on_us_; }

 private:
  void schedule_next_on();

  Simulator& sim_;
  Channel& channel_;
  RandomStream stream_;
  InterfererProfile profile_;
  bool on_ = false;
  Duration requested_on_us_ = 0;
};

}  // namespace eaps
