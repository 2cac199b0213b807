#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "eaps/ap/access_point.hpp"
#include "eaps/core/rng.hpp"
#include "eaps/predictor/evaluation.hpp"
#include "eaps/predictor/ewma.hpp"
#include "eaps/predictor/regressors.hpp"
#include "eaps/scheduler/control_packet.hpp"
#include "eaps/telemetry/collector.hpp"
#include "eaps/telemetry/dataset.hpp"

namespace eaps {

enum class ServerKind : std::uint8_t { edge, cloud, fixed };
std::string_view to_string(ServerKind k);
std::optional<ServerKind> parse_server_kind(std::string_view text);

/// Response delay of the application server, uniform on [min, max].
struct ServerProfile {
  ServerKind kind = ServerKind::edge;
  Duration min_us = 1 * kMillisecond;
  Duration max_us = 3 * kMillisecond;

  static ServerProfile edge() { return {ServerKind::edge, 1 * kMillisecond, 3 * kMillisecond}; }
  static ServerProfile cloud() { return {ServerKind::cloud, 25 * kMillisecond, 60 * kMillisecond}; }
  static ServerProfile fixed(Duration d) { return {ServerKind::fixed, d, d}; }
  static ServerProfile for_kind(ServerKind k);

  void validate() const;
  Duration draw(RandomStream& rs) const;
};

/// Echo server behind the AP's wired port. Each uplink that left the AP is
/// answered after a delay drawn from the stream keyed by its transaction,
/// so every discipline sees the same server delays.
class Server {
 public:
  using ArrivalHandler = std::function<void(const Packet& reply, SimTime t3, SimTime t6)>;

  Server(Simulator& sim, AccessPoint& ap, const Rng& rng, ServerProfile profile, std::int64_t reply_bytes);

  /// Feed of uplinks leaving the wired port (t3 stamped).
  void on_egress(Packet&& uplink, SimTime t3);
  void set_arrival_handler(ArrivalHandler h) { on_arrival_ = std::move(h); }
  const ServerProfile& profile() const { return profile_; }

 private:
  Simulator& sim_;
  AccessPoint& ap_;
  const Rng& rng_;
  ServerProfile profile_;
  std::int64_t reply_bytes_;
  ArrivalHandler on_arrival_;
};

/// Everything the scheduler decided for one transaction.
struct PredictionRecord {
  std::uint64_t txn = 0;
  NodeId station = 0;
  AccessCategory ac = AccessCategory::BE;
  SimTime at = 0;  // uplink reached the AP
  double da_us = 0.0;
  std::optional<double> db_estimate_us;
  std::optional<FeatureVector> features;
  std::optional<double> dc_pred_us;
  std::optional<double> sigma_us;
  std::optional<ControlPacket> control;
  bool clamped = false;
  // Filled in as the reply comes back.
  std::optional<SimTime> t3;
  std::optional<SimTime> t6;
};

/// A trained delay model ready for online use.
struct DelayModel {
  EtrModel model;
  Scaler scaler;
  ResidualStats residuals;
  /// Samples per feature vector; derived from the scaler's width.
  std::size_t k = 4;
  /// Sigma used for an AC missing from the residual table.
  double fallback_sigma_us = 1000.0;

  /// Throws ModelError if the scaler and model widths disagree.
  void validate() const;
  double predict_dc_us(const FeatureVector& v) const;
};

struct SchedulerConfig {
  Duration processing_delay_us = 50;
  double ewma_alpha = 0.125;
  /// History depth used when no model is loaded (dataset generation).
  std::size_t k = 4;
};

/// Edge scheduler: on every IoT uplink it estimates da, db and dc, and when
/// a model is loaded it sends the 4-byte schedule through the control band.
class Scheduler {
 public:
  Scheduler(Simulator& sim, AccessPoint& ap, Collector& collector, SchedulerConfig config,
            const DelayModel* model = nullptr);

  /// Connect to AccessPoint::set_uplink_observer.
  void on_uplink(const Packet& uplink, SimTime now);
  /// Connect to Server's arrival handler; updates the per-station db EWMA.
  void on_reply_arrival(const Packet& reply, SimTime t3, SimTime t6);

  const PredictionRecord* record(std::uint64_t txn) const;
  /// Removes and returns a transaction's record.
  std::optional<PredictionRecord> take(std::uint64_t txn);
  bool has_model() const { return model_ != nullptr; }
  std::uint64_t controls_sent() const { return controls_sent_; }
  std::optional<double> db_estimate(NodeId station) const;

 private:
  Simulator& sim_;
  AccessPoint& ap_;
  Collector& collector_;
  SchedulerConfig config_;
  const DelayModel* model_;
  std::map<NodeId, EwmaEstimator> db_;
  std::map<std::uint64_t, PredictionRecord> records_;
  std::uint64_t controls_sent_ = 0;
};

}  // namespace eaps
