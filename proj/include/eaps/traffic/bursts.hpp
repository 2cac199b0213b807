#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "eaps/core/access_category.hpp"
#include "eaps/core/sim_time.hpp"
#include "eaps/traffic/flow.hpp"

namespace eaps {

/// A maximal train of packets whose inter-arrival times stay below the
/// segmentation threshold.
struct Burst {
  std::size_t index = 0;
  SimTime start = 0;
  SimTime end = 0;  // timestamp of the last packet
  double duration_s = 0.0;
  /// Seconds from this burst's last packet to the next burst's first; 0 for the last burst.
  double gap_s = 0.0;
  double size_bytes = 0.0;
  double packets = 0.0;
  /// Packet counts indexed by index_of(ac).
  std::array<double, kNumAcs> per_ac{};
};

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Splits a time-sorted trace wherever the gap between consecutive packets
/// is >= threshold. Throws MetricError if the trace is not sorted or the
/// threshold is not positive.
std::vector<Burst> segment_bursts(const std::vector<TraceRecord>& trace, Duration threshold_us);

struct BurstinessResult {
  double value = 0.0;
  /// Bursts per second before normalization.
  double bursts_per_second = 0.0;
};

/// Rate factor max(0, 1 - 1/M) times the mean burst size, with M the number
/// of bursts per second over `window_s`.
BurstinessResult burstiness(const std::vector<Burst>& bursts, double window_s);

/// Gap-weighted mean relative change of burst duration, size, packet count
/// and per-AC composition between consecutive bursts. Zero denominators are
/// replaced by one unit (1 ms, 1 B, 1 packet) and zero gaps by 1 us.
double dynamicity(const std::vector<Burst>& bursts);

struct TraceMetrics {
  std::size_t packets = 0;
  std::size_t groups = 0;
  std::size_t bursts = 0;
  double window_s = 0.0;
  double threshold_ms = 0.0;
  double bursts_per_second = 0.0;
  double burstiness = 0.0;
  double dynamicity = 0.0;
  double mean_burst_bytes = 0.0;
  double stddev_burst_bytes = 0.0;
  double stddev_gap_s = 0.0;
};

enum class BurstScope : std::uint8_t {
  /// One packet train over the whole trace.
  aggregate,
  /// Segment each generating flow separately and average the flow metrics.
  /// Records without a flow id (imported traces) form a single group.
  per_flow,
};

/// Segments the trace and evaluates every metric. The measurement window is
/// the span of the whole trace for every group.
TraceMetrics trace_metrics(const std::vector<TraceRecord>& trace, Duration threshold_us,
                           BurstScope scope = BurstScope::per_flow);

}  // namespace eaps
