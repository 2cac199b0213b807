#include "eaps/traffic/flow.hpp"

#include <cmath>
#include <stdexcept>

namespace eaps {

void FlowSpec::validate() const {
  if (packet_bytes <= 0 || burst_bytes <= 0 || !(bit_rate_bps > 0) || inter_burst_us <= 0) {
    throw std::invalid_argument("flow sizes, rates and intervals must be positive");
  }
}

Duration FlowSpec::packet_interval_us() const {
  const auto us = std::llround(8.0 * static_cast<double>(packet_bytes) * 1e6 / bit_rate_bps);
  return std::max<Duration>(1, us);
}

std::int64_t FlowSpec::packets_per_burst() const { return (burst_bytes + packet_bytes - 1) / packet_bytes; }

void FlowRanges::validate() const {
  if (packet_bytes_min <= 0 || packet_bytes_max < packet_bytes_min) throw std::invalid_argument("bad packet size range");
  if (!(bit_rate_min_bps > 0) || bit_rate_max_bps < bit_rate_min_bps) throw std::invalid_argument("bad bit rate range");
  if (burst_bytes_min <= 0 || burst_bytes_max < burst_bytes_min) throw std::invalid_argument("bad burst size range");
  if (inter_burst_min_us <= 0 || inter_burst_max_us < inter_burst_min_us) {
    throw std::invalid_argument("bad inter-burst range");
  }
}

std::string_view to_string(DynamicityLevel level) { return level == DynamicityLevel::ND ? "ND" : "HD"; }

std::optional<DynamicityLevel> parse_dynamicity_level(std::string_view text) {
  if (text == "ND") return DynamicityLevel::ND;
  if (text == "HD") return DynamicityLevel::HD;
  return std::nullopt;
}

double variability_for(DynamicityLevel level) { return level == DynamicityLevel::ND ? 0.1 : 0.9; }

void TrafficConfig::validate() const {
  if (!(variability >= 0.0 && variability <= 1.0)) throw std::invalid_argument("variability must lie in [0, 1]");
  if (load_nodes < 0 || flows_per_node < 0) throw std::invalid_argument("flow counts must be >= 0");
  if (tcp_ack_bytes <= 0) throw std::invalid_argument("tcp ack size must be positive");
  if (tcp_window_packets < 0) throw std::invalid_argument("tcp window must be >= 0");
  ranges.validate();
}

namespace {

double log_uniform(RandomStream& rs, double lo, double hi) {
  if (lo == hi) return lo;
  return std::exp(rs.uniform(std::log(lo), std::log(hi)));
}

double linear_uniform(RandomStream& rs, double lo, double hi) { return lo == hi ? lo : rs.uniform(lo, hi); }

}  // namespace

FlowSpec draw_flow_spec(RandomStream& rs, const FlowRanges& r) {
  FlowSpec s;
  s.ac = static_cast<AccessCategory>(rs.uniform_int(0, 3));
  s.direction = static_cast<FlowDirection>(rs.uniform_int(0, 2));
  // Real-time classes run over UDP, the rest over a paced TCP-like transport.
  s.transport = transport_for(s.ac);
  s.packet_bytes = rs.uniform_int(r.packet_bytes_min, r.packet_bytes_max);
  const auto draw = r.log_scale ? log_uniform : linear_uniform;
  s.bit_rate_bps = draw(rs, r.bit_rate_min_bps, r.bit_rate_max_bps);
  s.burst_bytes = std::llround(draw(rs, static_cast<double>(r.burst_bytes_min), static_cast<double>(r.burst_bytes_max)));
  s.inter_burst_us = rs.uniform_int(r.inter_burst_min_us, r.inter_burst_max_us);
  return s;
}

TrafficGenerator::TrafficGenerator(const TrafficConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const Rng root(seed);
  const int n = config_.flow_count();
  flows_.reserve(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) {
    flows_.push_back(Flow{root.derive("traffic.flow", static_cast<std::uint64_t>(f)), {}, 0, 0, 0, false,
                          Direction::uplink});
    Flow& fl = flows_.back();
    fl.spec = draw_flow_spec(fl.rs, config_.ranges);
    // Random phase so flows do not start in lockstep.
    const SimTime first = fl.rs.uniform_int(0, fl.spec.inter_burst_us - 1);
    fl.left_in_burst = fl.spec.packets_per_burst();
    fl.next_time = first;
    due_.push({first, f});
  }
}

void TrafficGenerator::begin_burst(int f, SimTime start) {
  Flow& fl = flows_[static_cast<std::size_t>(f)];
  if (fl.rs.bernoulli(config_.variability)) {
    fl.spec = draw_flow_spec(fl.rs, config_.ranges);
    ++redraws_;
  }
  fl.left_in_burst = fl.spec.packets_per_burst();
  fl.next_time = start;
}

TraceRecord TrafficGenerator::emit(int f) {
  Flow& fl = flows_[static_cast<std::size_t>(f)];
  TraceRecord r;
  r.timestamp_us = fl.next_time;
  r.ac = fl.spec.ac;
  r.flow = f;
  if (fl.pending_ack) {
    fl.pending_ack = false;
    r.size_bytes = config_.tcp_ack_bytes;
    r.direction = fl.ack_direction;
  } else {
    if (record_bursts_ && fl.left_in_burst == fl.spec.packets_per_burst()) {
      burst_log_.push_back({f, fl.next_time, fl.spec});
    }
    r.size_bytes = fl.spec.packet_bytes;
    switch (fl.spec.direction) {
      case FlowDirection::uplink: r.direction = Direction::uplink; break;
      case FlowDirection::downlink: r.direction = Direction::downlink; break;
      case FlowDirection::bidirectional: r.direction = fl.sent % 2 == 0 ? Direction::downlink : Direction::uplink; break;
    }
    ++fl.sent;
    --fl.left_in_burst;
    if (fl.spec.transport == Transport::tcp_paced && fl.sent % 2 == 0) {
      fl.pending_ack = true;
      fl.ack_direction = r.direction == Direction::uplink ? Direction::downlink : Direction::uplink;
    }
  }
  if (fl.pending_ack) return r;  // the ack goes out at the same instant
  if (fl.left_in_burst > 0) {
    fl.next_time += fl.spec.packet_interval_us();
  } else {
    begin_burst(f, fl.next_time + fl.spec.packet_interval_us() + fl.spec.inter_burst_us);
  }
  return r;
}

std::optional<TraceRecord> TrafficGenerator::next(SimTime horizon) {
  if (due_.empty() || due_.top().time >= horizon) return std::nullopt;
  const Due d = due_.top();
  due_.pop();
  TraceRecord r = emit(d.flow);
  due_.push({flows_[static_cast<std::size_t>(d.flow)].next_time, d.flow});
  return r;
}

std::vector<TraceRecord> generate_trace(const TrafficConfig& config, std::uint64_t seed, SimTime horizon) {
  if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");
  TrafficGenerator gen(config, seed);
  std::vector<TraceRecord> out;
  while (auto r = gen.next(horizon)) out.push_back(*r);
  return out;
}

}  // namespace eaps
