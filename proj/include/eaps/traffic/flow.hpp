#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <string_view>
#include <vector>

#include "eaps/core/access_category.hpp"
#include "eaps/core/packet.hpp"
#include "eaps/core/rng.hpp"
#include "eaps/core/sim_time.hpp"

namespace eaps {

enum class FlowDirection : std::uint8_t { uplink, downlink, bidirectional };
enum class Transport : std::uint8_t { udp, tcp_paced };

/// Voice and video use UDP; best effort and background the paced TCP-like
/// transport.
constexpr Transport transport_for(AccessCategory ac) {
  return ac == AccessCategory::VO || ac == AccessCategory::VI ? Transport::udp : Transport::tcp_paced;
}

struct FlowSpec {
  AccessCategory ac = AccessCategory::BE;
  FlowDirection direction = FlowDirection::downlink;
  Transport transport = Transport::udp;
  std::int64_t packet_bytes = 1000;
  double bit_rate_bps = 1e6;
  std::int64_t burst_bytes = 10000;
  Duration inter_burst_us = 100 * kMillisecond;

  void validate() const;
  /// Spacing of packets inside a burst, at least 1 us.
  Duration packet_interval_us() const;
  std::int64_t packets_per_burst() const;
  bool operator==(const FlowSpec&) const = default;
};

/// Ranges new flow parameters are drawn from. Sizes and inter-burst gaps are
/// uniform; bit rate and burst size span decades and are drawn log-uniformly.
struct FlowRanges {
  std::int64_t packet_bytes_min = 64;
  std::int64_t packet_bytes_max = 1460;
  double bit_rate_min_bps = 1e6;
  double bit_rate_max_bps = 20e6;
  std::int64_t burst_bytes_min = 1000;
  std::int64_t burst_bytes_max = 500000;
  Duration inter_burst_min_us = 10 * kMillisecond;
  Duration inter_burst_max_us = 2 * kSecond;
  /// Draw bit rate and burst size log-uniformly; uniformly when false.
  bool log_scale = true;

  void validate() const;
};

enum class DynamicityLevel : std::uint8_t { ND, HD };
std::string_view to_string(DynamicityLevel level);
std::optional<DynamicityLevel> parse_dynamicity_level(std::string_view text);
/// Redraw probability used for each level: 0.1 for ND, 0.9 for HD.
double variability_for(DynamicityLevel level);

struct TrafficConfig {
  /// Probability of drawing fresh flow parameters after each burst.
  double variability = 0.1;
  int load_nodes = 4;
  int flows_per_node = 4;
  FlowRanges ranges{};
  /// Size of the transport acknowledgement sent back every second data
  /// packet of a tcp_paced flow.
  std::int64_t tcp_ack_bytes = 40;
  /// Packets of one tcp_paced flow allowed inside the network at once; the
  /// rest wait at the sender. 0 disables the limit.
  int tcp_window_packets = 32;

  void validate() const;
  int flow_count() const { return load_nodes * flows_per_node; }
};

/// One background packet.
struct TraceRecord {
  SimTime timestamp_us = 0;
  std::int64_t size_bytes = 0;
  Direction direction = Direction::downlink;
  AccessCategory ac = AccessCategory::BE;
  /// Generating flow; load node = flow / flows_per_node. -1 for imported traces.
  int flow = -1;

  bool operator==(const TraceRecord&) const = default;
};

FlowSpec draw_flow_spec(RandomStream& rs, const FlowRanges& ranges);

/// Lazily merges the packet streams of all flows in time order. The output
/// is a pure function of (config, seed); each flow draws from its own keyed
/// stream.
class TrafficGenerator {
 public:
  struct BurstStart {
    int flow;
    SimTime start;
    FlowSpec spec;
  };

  TrafficGenerator(const TrafficConfig& config, std::uint64_t seed);

  /// Next packet, or nullopt once every remaining packet lies at or past `horizon`.
  std::optional<TraceRecord> next(SimTime horizon);

  /// Keep the parameters of every burst for inspection.
  void record_bursts(bool on) { record_bursts_ = on; }
  const std::vector<BurstStart>& bursts() const { return burst_log_; }
  std::uint64_t redraws() const { return redraws_; }

 private:
  struct Flow {
    RandomStream rs;
    FlowSpec spec;
    SimTime next_time = 0;
    std::int64_t left_in_burst = 0;
    std::uint64_t sent = 0;
    bool pending_ack = false;
    Direction ack_direction = Direction::uplink;
  };
  struct Due {
    SimTime time;
    int flow;
    bool operator>(const Due& o) const { return time != o.time ? time > o.time : flow > o.flow; }
  };

  void begin_burst(int f, SimTime start);
  TraceRecord emit(int f);

  TrafficConfig config_;
  std::vector<Flow> flows_;
  std::priority_queue<Due, std::vector<Due>, std::greater<>> due_;
  bool record_bursts_ = false;
  std::vector<BurstStart> burst_log_;
  std::uint64_t redraws_ = 0;
};

/// Every packet with timestamp < horizon.
std::vector<TraceRecord> generate_trace(const TrafficConfig& config, std::uint64_t seed, SimTime horizon);

}  // namespace eaps
