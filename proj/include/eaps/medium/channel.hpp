#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "eaps/core/packet.hpp"
#include "eaps/core/rng.hpp"
#include "eaps/core/simulator.hpp"
#include "eaps/medium/edca.hpp"

namespace eaps {

/// A queue that feeds one EDCA contender. The channel only ever looks at the
/// head frame; the owner decides what "head" means (FIFO, round robin, ...).
class FrameSource {
 public:
  virtual ~FrameSource() = default;

  /// Next frame to send, or nullptr. Must return the same frame until it is
  /// taken or dropped.
  virtual Packet* head() = 0;
  virtual Packet take_head() = 0;

  virtual void on_tx_start(const Packet& /*frame*/, SimTime /*start*/, SimTime /*end*/) {}
  virtual void on_delivered(Packet&& frame, SimTime start, SimTime end) = 0;
  virtual void on_dropped(Packet&& frame, SimTime now) = 0;
  virtual void on_attempt_failed(const Packet& /*frame*/, SimTime /*now*/) {}
};

struct ContenderOptions {
  /// Broadcast frames are sent once, without ACK or retries (beacons).
  bool broadcast = false;
  /// Access after PIFS with no backoff (beacons).
  bool pifs_access = false;
  /// Rate used for this contender's frames; 0 selects the PHY data rate.
  double rate_bps = 0.0;
};

using ContenderId = std::size_t;

/// Non-overlapping busy intervals with prefix sums, for windowed utilization.
class BusyMeter {
 public:
  /// Throws std::logic_error if `start` precedes the end of the last interval.
  void add(SimTime start, SimTime end);
  /// Busy microseconds inside [a, b).
  Duration busy_between(SimTime a, SimTime b) const;
  Duration total() const { return total_; }
  /// Forget intervals that ended before `t`.
  void prune(SimTime t);

 private:
  struct Interval {
    SimTime start;
    SimTime end;
    Duration cum_before;
  };
  Duration busy_before(SimTime t) const;

  std::deque<Interval> intervals_;
  Duration total_ = 0;
  Duration pruned_ = 0;
};

/// Channel utilization from a busy time, as reported by millisecond
/// driver counters: busy time is floored to whole ms before dividing.
/// With a 10 ms window the result is a multiple of 10 %.
double quantized_utilization(Duration busy_us, Duration window_us);

struct ChannelConfig {
  EdcaParams edca = EdcaParams::defaults();
  PhyParams phy{};
  double noise_floor_dbm = -95.0;
  double noise_ceiling_dbm = -66.0;
  /// Per-attempt Bernoulli loss probability at the noise floor.
  double loss_prob = 0.0;
  /// Added loss probability when the noise sits at the ceiling; scales
  /// linearly in between.
  double loss_noise_coupling = 0.0;
  Duration busy_history_us = 2 * kSecond;
};

struct ChannelStats {
  std::uint64_t exchanges = 0;
  std::uint64_t collisions = 0;
  std::uint64_t internal_collisions = 0;
  std::uint64_t failed_attempts = 0;
  std::uint64_t drops = 0;
  Duration interferer_busy_us = 0;
  Duration granted_airtime_us = 0;
};

/// Shared wireless medium with EDCA contention. Each registered contender is
/// one (device, AC) queue with its own AIFS/CW state. When several queues of
/// one device reach zero backoff in the same slot the highest AC transmits and
/// the others redraw with a doubled window; equal access times on different
/// devices collide.
class Channel {
 public:
  Channel(Simulator& sim, const Rng& rng, ChannelConfig config);

  ContenderId add_contender(NodeId device, AccessCategory ac, FrameSource* source,
                            ContenderOptions options = {});

  /// Tells the channel that `id`'s source may have a frame waiting.
  void notify(ContenderId id);

  /// Occupies the medium for `on_us` as soon as it is idle (an external
  /// device that does not defer to our backoff). While it lasts the noise
  /// level rises by `excursion_db`. `on_end` fires when it finishes.
  void interferer_burst(Duration on_us, double excursion_db, std::function<void(SimTime)> on_end = {});
  bool interference_active() const { return sim_.now() < interference_until_; }

  double noise_dbm() const;
  double loss_probability() const;

  /// Percent utilization over the trailing window ending now.
  double sample_utilization(Duration window_us) const;
  Duration busy_between(SimTime a, SimTime b) const { return busy_.busy_between(a, b); }
  Duration total_busy() const { return busy_.total(); }

  /// Test hook: every backoff draw returns this many slots.
  void force_backoff(std::optional<int> slots) { forced_backoff_ = slots; }

  const ChannelConfig& config() const { return config_; }
  const ChannelStats& stats() const { return stats_; }
  std::uint64_t grants(ContenderId id) const { return contenders_.at(id).grants; }
  int current_cw(ContenderId id) const { return contenders_.at(id).cw; }

 private:
  struct Contender {
    NodeId device;
    AccessCategory ac;
    AcParams params;
    Duration aifs;
    FrameSource* source;
    ContenderOptions options;
    bool active = false;
    int cw = 0;
    int backoff = 0;
    SimTime ref = 0;  // earliest start of the current countdown
    std::uint32_t draws = 0;
    std::uint64_t grants = 0;
  };

  struct Attempt {
    ContenderId id;
    Duration airtime;
  };

  void activate(Contender& c);
  void draw_backoff(Contender& c);
  SimTime access_time(const Contender& c) const;
  void freeze(SimTime t);
  void reschedule();
  void resolve(SimTime t);
  void start_exchange(std::vector<Attempt> attempts, SimTime start, SimTime txop_start);
  void end_exchange(std::vector<Attempt> attempts, bool success, SimTime start, SimTime txop_start);
  void begin_interference(Duration on_us, double excursion_db, std::function<void(SimTime)> on_end);
  void start_pending_burst();
  Duration exchange_duration(const Contender& c, const Packet& frame) const;
  Duration airtime(const Contender& c, const Packet& frame) const;
  bool draw_loss(const Contender& c, const Packet& frame);

  Simulator& sim_;
  const Rng& rng_;
  ChannelConfig config_;
  std::vector<Contender> contenders_;
  BusyMeter busy_;
  ChannelStats stats_;
  SimTime busy_until_ = 0;
  bool in_exchange_ = false;
  std::optional<EventId> resolution_;
  std::optional<int> forced_backoff_;
  double noise_excursion_db_ = 0.0;
  SimTime interference_until_ = 0;
  struct PendingBurst {
    Duration on_us;
    double excursion_db;
    std::function<void(SimTime)> on_end;
  };
  std::deque<PendingBurst> pending_bursts_;
};

}  // namespace eaps
