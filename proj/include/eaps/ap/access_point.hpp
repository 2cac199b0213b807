#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include "eaps/ap/qdisc.hpp"
#include "eaps/core/packet.hpp"
#include "eaps/core/simulator.hpp"
#include "eaps/medium/channel.hpp"

namespace eaps {

/// What the AP needs from an associated station.
class StationPort {
 public:
  virtual ~StationPort() = default;
  /// A unicast frame finished its airtime at `end` and was acknowledged.
  virtual void on_downlink(Packet&& frame, SimTime start, SimTime end) = 0;
  /// Beacon received; `indicated` is this station's TIM bit.
  virtual void on_beacon(bool /*indicated*/, SimTime /*start*/, SimTime /*end*/) {}
  /// A frame for this station was dropped after the retry limit or on
  /// arrival at a full qdisc band.
  virtual void on_downlink_lost(const Packet& /*frame*/, SimTime /*now*/) {}
  /// Reply to a PS-Poll or APSD trigger: how many buffered frames were released.
  virtual void on_poll_response(std::size_t /*released*/, SimTime /*now*/) {}
};

struct ApConfig {
  Duration beacon_interval_us = 102400;
  std::int64_t beacon_bytes = 100;
  double wired_rate_bps = 1e9;
  std::int64_t wired_h_mac = 26;
  std::int64_t wired_h_phy = 0;
  std::size_t band_capacity = 1000;
  /// Driver queue depth per access category, shared by all stations.
  std::size_t mac_queue_capacity = 64;
  /// Serve driver queues round robin across stations instead of in
  /// arrival order.
  bool driver_round_robin = false;

  void validate() const;
};

struct ApStats {
  std::uint64_t downlink_enqueued = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped_retry = 0;
  std::uint64_t dropped_qdisc = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t beacons = 0;
  std::uint64_t uplinks_received = 0;
  std::uint64_t wired_departures = 0;
  std::uint64_t ps_buffered = 0;
};

class AccessPoint {
 public:
  using PacketObserver = std::function<void(const Packet&, SimTime)>;

  AccessPoint(Simulator& sim, Channel& channel, ApConfig config);
  ~AccessPoint();
  AccessPoint(const AccessPoint&) = delete;
  AccessPoint& operator=(const AccessPoint&) = delete;

  void attach_station(NodeId id, StationPort* port);
  /// Starts beaconing at t = 0, BI, 2 BI, ...
  void start();

  // --- wired side -------------------------------------------------------
  /// Wired ingress: stamps t6 on transaction packets, feeds the input-rate
  /// meter and the qdisc.
  void enqueue_downlink(Packet p);
  /// Scheduler path into the control band; bypasses the wired meter.
  void inject_control(Packet p);

  // --- wireless side ----------------------------------------------------
  /// Called when a station's frame to the AP finishes on air.
  void receive_uplink(Packet&& p, SimTime end);
  /// Out-of-band power-management signalling.
  void set_station_dozing(NodeId id, bool dozing);
  bool station_dozing(NodeId id) const { return dozing_.count(id) != 0; }
  /// True while a frame addressed to `id` is on air or being retried.
  bool frame_in_flight_to(NodeId id) const;
  /// Releases every buffered frame of `id`; returns how many.
  std::size_t handle_apsd_trigger(NodeId id);
  /// Releases one buffered frame of `id`; returns 0 or 1.
  std::size_t handle_ps_poll(NodeId id);

  // --- observers --------------------------------------------------------
  /// Fires for each uplink data packet bound for the wired side, before it
  /// joins the wired egress queue.
  void set_uplink_observer(PacketObserver f) { on_uplink_ = std::move(f); }
  /// Fires after an uplink left the wired port (t3 stamped).
  void set_egress_observer(std::function<void(Packet&&, SimTime)> f) { on_egress_ = std::move(f); }
  /// Fires when a transaction downlink leaves the qdisc.
  void set_downlink_ready_observer(PacketObserver f) { on_ready_ = std::move(f); }
  /// Fires when a beacon starts on air (target beacon time, start).
  void set_beacon_observer(std::function<void(SimTime, SimTime)> f) { on_beacon_ = std::move(f); }

  // --- telemetry --------------------------------------------------------
  double delta_a_us() const;
  std::vector<std::int64_t> wired_backlog_sizes() const;
  std::size_t qdisc_occupancy(AccessCategory ac) const { return qdisc_.occupancy(ac); }
  std::size_t qdisc_control_occupancy() const { return qdisc_.occupancy(PrioQdisc::kControlBand); }
  std::size_t mac_occupancy(AccessCategory ac) const;
  std::size_t ps_buffered(NodeId id) const;
  /// Wired-ingress bytes that arrived in [a, b).
  std::int64_t wired_bytes_between(SimTime a, SimTime b) const;
  std::uint64_t retransmissions() const { return stats_.retransmissions; }
  /// Packets still inside the AP (qdisc, driver queues, PS buffers).
  std::size_t in_system() const;

  const PrioQdisc& qdisc() const { return qdisc_; }
  const ApStats& stats() const { return stats_; }
  const ApConfig& config() const { return config_; }
  SimTime next_tbtt(SimTime t) const;

  void write_stats_csv(std::ostream& out) const;

 private:
  class AcQueue;
  class BeaconSource;
  friend class AcQueue;
  friend class BeaconSource;

  static AccessCategory mac_ac(const Packet& p);
  AcQueue& queue_for(AccessCategory ac) { return *queues_[index_of(ac)]; }
  void pump();
  void start_egress();
  void send_beacon(SimTime tbtt);
  void release(NodeId id, std::size_t max_frames, std::size_t& released);
  void delivered(Packet&& frame, SimTime start, SimTime end);
  void dropped(Packet&& frame, SimTime now);
  StationPort* port(NodeId id) const;

  Simulator& sim_;
  Channel& channel_;
  ApConfig config_;
  PrioQdisc qdisc_;
  std::array<std::unique_ptr<AcQueue>, kNumAcs> queues_;
  std::unique_ptr<BeaconSource> beacon_;
  std::map<NodeId, StationPort*> stations_;
  std::set<NodeId> dozing_;
  std::map<NodeId, std::deque<Packet>> ps_buffer_;
  std::deque<Packet> egress_;
  bool egress_busy_ = false;
  std::deque<std::pair<SimTime, std::int64_t>> ingress_log_;  // time, cumulative bytes
  std::int64_t ingress_bytes_ = 0;
  std::int64_t ingress_pruned_ = 0;
  ApStats stats_;
  PacketObserver on_uplink_;
  std::function<void(Packet&&, SimTime)> on_egress_;
  PacketObserver on_ready_;
  std::function<void(SimTime, SimTime)> on_beacon_;
};

}  // namespace eaps
