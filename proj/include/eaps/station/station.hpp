#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "eaps/ap/access_point.hpp"
#include "eaps/core/packet.hpp"
#include "eaps/core/simulator.hpp"
#include "eaps/medium/tx_queue.hpp"
#include "eaps/scheduler/control_packet.hpp"
#include "eaps/station/energy.hpp"

namespace eaps {

enum class Discipline : std::uint8_t { CAM, PSM, APSM, APSD_POLL, EAPS_E, EAPS_M, EAPS_L };

std::string_view to_string(Discipline d);
std::optional<Discipline> parse_discipline(std::string_view text);
constexpr bool is_eaps(Discipline d) {
  return d == Discipline::EAPS_E || d == Discipline::EAPS_M || d == Discipline::EAPS_L;
}

/// Packet ids of transaction frames: uplink, triggers and polls use
/// sequence numbers 0..254, the server's downlink uses 255.
constexpr PacketId iot_packet_id(std::uint64_t txn, unsigned seq) {
  return (PacketId(1) << 40) + txn * 256 + seq;
}
constexpr PacketId control_packet_id(std::uint64_t txn) { return (PacketId(2) << 40) + txn; }

namespace txn_flags {
inline constexpr std::uint32_t uplink_dropped = 1u << 0;
inline constexpr std::uint32_t control_timeout = 1u << 1;
inline constexpr std::uint32_t no_prediction = 1u << 2;
inline constexpr std::uint32_t timeout = 1u << 3;
inline constexpr std::uint32_t downlink_lost = 1u << 4;
inline constexpr std::uint32_t degraded = 1u << 5;
inline constexpr std::uint32_t schedule_clamped = 1u << 6;
}  // namespace txn_flags

std::string format_flags(std::uint32_t flags);

struct StationConfig {
  Discipline discipline = Discipline::CAM;
  PowerStateTable power{};
  Duration apsm_tail_us = 10 * kMillisecond;
  Duration apsd_poll_interval_us = 20 * kMillisecond;
  /// EAPS: how long to wait for the schedule before falling back to PSM.
  Duration control_timeout_us = 20 * kMillisecond;
  Duration transaction_timeout_us = 2 * kSecond;
  /// Payload bytes of PS-Poll / NULL trigger frames.
  std::int64_t null_frame_bytes = 0;

  void validate() const;
};

struct TransactionRecord {
  std::uint64_t txn_id = 0;
  NodeId station = 0;
  Discipline discipline = Discipline::CAM;
  AccessCategory ac = AccessCategory::BE;
  SimTime requested = 0;
  SimTime t1 = 0;
  std::optional<SimTime> t2;
  std::optional<SimTime> t7;
  std::optional<SimTime> t8;
  Duration duration_us = 0;
  double energy_uj = 0.0;
  std::optional<ControlPacket> control;
  /// EAPS: when the station planned to be awake and trigger.
  std::optional<SimTime> scheduled_wake;
  /// PSM retrieval: start of the beacon whose TIM bit led to delivery.
  std::optional<SimTime> retrieval_beacon;
  std::uint32_t flags = 0;
  bool completed = false;
};

/// An IoT station running one power-save discipline. It performs at most one
/// request/response transaction at a time and reports each as a
/// TransactionRecord covering [t1, downlink received].
class Station : public StationPort, private TxQueueOwner {
 public:
  using CompletionHandler = std::function<void(TransactionRecord&&)>;

  Station(Simulator& sim, Channel& channel, AccessPoint& ap, NodeId id, StationConfig config);
  ~Station() override;

  NodeId id() const { return id_; }
  Discipline discipline() const { return config_.discipline; }
  bool busy() const { return pending_.has_value(); }
  bool asleep() const { return asleep_; }
  const EnergyMeter& meter() const { return meter_; }

  void set_completion_handler(CompletionHandler h) { on_complete_ = std::move(h); }

  /// Sends the uplink of a new transaction. Throws std::logic_error if a
  /// transaction is already pending.
  void start_transaction(std::uint64_t txn_id, AccessCategory ac, std::int64_t uplink_bytes);

  /// Sleep offset from the control packet: the wake target relative to t1
  /// minus the time already elapsed (t2 - t1). May be <= 0.
  static Duration eaps_sleep_us(const ControlPacket& ctrl, Discipline variant, Duration elapsed_us);

  // StationPort
  void on_downlink(Packet&& frame, SimTime start, SimTime end) override;
  void on_beacon(bool indicated, SimTime start, SimTime end) override;
  void on_downlink_lost(const Packet& frame, SimTime now) override;
  void on_poll_response(std::size_t released, SimTime now) override;

 private:
  enum class Phase : std::uint8_t {
    idle,             // no transaction
    uplink,           // uplink queued or on air
    awake_wait,       // awake, downlink will be sent directly (CAM, APSM tail, EAPS late)
    control_wait,     // EAPS: awake until the schedule arrives
    eaps_sleep,       // EAPS: dozing until the scheduled wake
    trigger_sent,     // EAPS / APSD: NULL trigger queued, awaiting reply
    retrieving,       // released frames on their way
    psm_doze,         // PSM: dozing, waking for beacons
    psm_listen,       // PSM: awake for a beacon
    psm_poll,         // PSM: PS-Poll sent
    apsd_doze,        // APSD: dozing between polls
  };

  // TxQueueOwner
  void on_tx(const Packet& frame, SimTime start, SimTime end) override;
  void on_sent(Packet&& frame, SimTime start, SimTime end) override;
  void on_lost(Packet&& frame, SimTime now) override;

  void after_uplink(SimTime t1);
  void send_null(PacketKind kind);
  void enter_psm();
  void doze_until_beacon();
  void doze_until(SimTime wake_at, const char* tag, std::function<void()> on_wake);
  void wake(SimTime now);
  void cancel_timer();
  void arm_timer(SimTime at, const char* tag, std::function<void()> fn);
  void complete(SimTime t8);
  void abort(std::uint32_t flag);
  void finish();
  void go_idle_between_transactions();
  bool is_pending_downlink(const Packet& frame) const;

  Simulator& sim_;
  AccessPoint& ap_;
  NodeId id_;
  StationConfig config_;
  EnergyMeter meter_;
  std::array<std::unique_ptr<TxQueue>, kNumAcs> queues_;
  CompletionHandler on_complete_;

  Phase phase_ = Phase::idle;
  std::optional<TransactionRecord> pending_;
  double energy_at_t1_ = 0.0;
  unsigned next_seq_ = 0;
  bool asleep_ = false;
  std::optional<EventId> wake_event_;
  std::optional<EventId> timer_;
  std::optional<EventId> txn_timeout_;
  SimTime poll_base_ = 0;
  SimTime sleep_started_ = 0;
  std::size_t released_remaining_ = 0;
  bool retrieval_via_poll_ = false;
};

}  // namespace eaps
