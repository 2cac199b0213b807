#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "eaps/ap/access_point.hpp"
#include "eaps/medium/tx_queue.hpp"
#include "eaps/traffic/flow.hpp"

namespace eaps {

/// Always-awake wireless node that sources and sinks background flows.
class LoadNode : public StationPort, private TxQueueOwner {
 public:
  struct Stats {
    std::uint64_t uplink_sent = 0;
    std::uint64_t uplink_lost = 0;
    std::uint64_t downlink_received = 0;
    std::uint64_t downlink_lost = 0;
  };
  /// Called once per packet of this node when it leaves the network:
  /// delivered either way, or dropped anywhere on the path.
  using ReleaseHandler = std::function<void(PacketId)>;

  LoadNode(Channel& channel, AccessPoint& ap, NodeId id, std::size_t queue_capacity = 1000);
  ~LoadNode() override;

  NodeId id() const { return id_; }
  void send_uplink(Packet p);
  const Stats& stats() const { return stats_; }
  std::uint64_t tail_drops() const;
  void set_release_handler(ReleaseHandler h) { on_release_ = std::move(h); }

  void on_downlink(Packet&& frame, SimTime start, SimTime end) override;
  void on_downlink_lost(const Packet& frame, SimTime now) override;

 private:
  void on_sent(Packet&& frame, SimTime start, SimTime end) override;
  void on_lost(Packet&& frame, SimTime now) override;
  void release(PacketId id) {
    if (on_release_) on_release_(id);
  }

  AccessPoint& ap_;
  NodeId id_;
  std::array<std::unique_ptr<TxQueue>, kNumAcs> queues_;
  Stats stats_;
  ReleaseHandler on_release_;
};

/// Replays a TrafficGenerator into the network: uplink records are queued
/// at their load node, downlink records enter the AP's wired ingress.
/// Packet ids are the injection order. Packets of tcp_paced flows obey a
/// window: while `window` of a flow's packets are inside the network the
/// next ones wait at the sender and go out as earlier ones leave.
class TrafficDriver {
 public:
  TrafficDriver(Simulator& sim, AccessPoint& ap, std::vector<LoadNode*> nodes, TrafficGenerator& gen,
                int flows_per_node, SimTime horizon, int window = 0);
  void start();
  std::uint64_t injected() const { return injected_; }
  /// Packets that had to wait for the window at least once.
  std::uint64_t held() const { return held_total_; }
  /// Called with every record as it enters the network, stamped with the
  /// actual injection time.
  void set_record_observer(std::function<void(const TraceRecord&)> f) { on_record_ = std::move(f); }

 private:
  struct FlowState {
    int in_network = 0;
    std::deque<TraceRecord> waiting;
  };

  void schedule_next();
  void offer(const TraceRecord& r);
  void inject(TraceRecord r, bool reserved = false);
  void released(PacketId id);
  bool windowed(const TraceRecord& r) const { return window_ > 0 && transport_for(r.ac) == Transport::tcp_paced; }

  Simulator& sim_;
  AccessPoint& ap_;
  std::vector<LoadNode*> nodes_;
  TrafficGenerator& gen_;
  int flows_per_node_;
  SimTime horizon_;
  int window_;
  std::uint64_t injected_ = 0;
  std::uint64_t held_total_ = 0;
  std::unordered_map<int, FlowState> flows_;
  std::unordered_map<PacketId, int> owner_;  // windowed packet id -> flow
  std::function<void(const TraceRecord&)> on_record_;
};

}  // namespace eaps
