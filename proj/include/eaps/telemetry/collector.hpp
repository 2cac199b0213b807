#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "eaps/ap/access_point.hpp"
#include "eaps/core/rng.hpp"
#include "eaps/core/simulator.hpp"
#include "eaps/medium/channel.hpp"

namespace eaps {

inline constexpr std::size_t kFeaturesPerSample = 12;

/// Column names of one sample block, in CSV order.
const std::array<const char*, kFeaturesPerSample>& sample_feature_names();

/// The periodic AP-side measurements taken at one sampling boundary.
struct FeatureSample {
  /// Nominal boundary n * interval. The sampler may run late; see spacing_us.
  SimTime time = 0;
  /// Actual time since the previous sample was taken (0 for the first).
  Duration spacing_us = 0;
  bool stale = false;
  double cu = 0.0;   // channel utilization over the last interval, %
  double cn = 0.0;   // noise level, dBm
  double rin = 0.0;  // wired input rate over the last interval, B/s
  double w = 0.0;    // AP retransmissions since the previous sample
  std::array<double, kNumAcs> q{};     // qdisc occupancy, VO..BK
  std::array<double, kNumAcs> qhat{};  // driver queue occupancy, VO..BK

  std::array<double, kFeaturesPerSample> values() const;
};

/// Model input for one prediction: the k most recent samples (oldest
/// first), the transaction's AC and the expected da + db.
struct FeatureVector {
  std::vector<FeatureSample> samples;
  AccessCategory ac = AccessCategory::BE;
  double da_plus_db_us = 0.0;

  /// [ac rank, da+db, block_0..block_{k-1}] with ac rank VO=0 .. BK=3.
  std::vector<double> flatten() const;
};

std::size_t feature_count(std::size_t k);
/// Names matching flatten(): ac, da_plus_db_us, cu_0 ... qhbk_{k-1}.
std::vector<std::string> feature_names(std::size_t k);

struct CollectorConfig {
  Duration interval_us = 10 * kMillisecond;
  std::size_t history = 6;
  /// Probability that the sampler runs late at a boundary, and the range
  /// of the delay as a fraction of the interval.
  double stall_probability = 0.001;
  double stall_min_fraction = 0.6;
  double stall_max_fraction = 2.0;
  /// A sample is stale when its spacing exceeds this many intervals.
  double stale_factor = 1.5;

  void validate() const;
};

class Collector {
 public:
  Collector(Simulator& sim, Channel& channel, AccessPoint& ap, const Rng& rng, CollectorConfig config);

  /// Schedules sampling at every interval boundary from now on.
  void start();
  /// Takes a sample now at nominal boundary `nominal` and appends it.
  const FeatureSample& sample_tick(SimTime nominal);

  const std::deque<FeatureSample>& history() const { return history_; }
  std::uint64_t samples_taken() const { return taken_; }
  std::uint64_t stale_samples() const { return stale_; }
  const CollectorConfig& config() const { return config_; }

  /// The k latest samples, or nullopt when fewer exist or any of them is stale.
  std::optional<FeatureVector> assemble_vector(std::size_t k, AccessCategory ac, double da_plus_db_us) const;

 private:
  void schedule_boundary(SimTime nominal);

  Simulator& sim_;
  Channel& channel_;
  AccessPoint& ap_;
  RandomStream stalls_;
  CollectorConfig config_;
  std::deque<FeatureSample> history_;
  std::optional<SimTime> last_taken_;
  std::uint64_t last_retx_ = 0;
  std::uint64_t taken_ = 0;
  std::uint64_t stale_ = 0;
};

}  // namespace eaps
