#include "eaps/scheduler/scheduler.hpp"

#include <stdexcept>

#include "eaps/station/station.hpp"

namespace eaps {

std::string_view to_string(ServerKind k) {
  switch (k) {
    case ServerKind::edge: return "edge";
    case ServerKind::cloud: return "cloud";
    case ServerKind::fixed: return "fixed";
  }
  return "?";
}

std::optional<ServerKind> parse_server_kind(std::string_view text) {
  if (text == "edge") return ServerKind::edge;
  if (text == "cloud") return ServerKind::cloud;
  if (text == "fixed") return ServerKind::fixed;
  return std::nullopt;
}

ServerProfile ServerProfile::for_kind(ServerKind k) {
  switch (k) {
    case ServerKind::cloud: return cloud();
    case ServerKind::fixed: return fixed(30 * kMillisecond);
    case ServerKind::edge: break;
  }
  return edge();
}

void ServerProfile::validate() const {
  if (min_us < 0 || max_us < min_us) throw std::invalid_argument("server delay range must satisfy 0 <= min <= max");
}

Duration ServerProfile::draw(RandomStream& rs) const {
  if (min_us == max_us) return min_us;
  return rs.uniform_int(min_us, max_us);
}

Server::Server(Simulator& sim, AccessPoint& ap, const Rng& rng, ServerProfile profile, std::int64_t reply_bytes)
    : sim_(sim), ap_(ap), rng_(rng), profile_(profile), reply_bytes_(reply_bytes) {
  profile_.validate();
  if (reply_bytes_ <= 0) throw std::invalid_argument("reply size must be positive");
}

void Server::on_egress(Packet&& uplink, SimTime t3) {
  if (!uplink.txn || uplink.kind != PacketKind::data) return;
  RandomStream rs = rng_.derive("server.delay", *uplink.txn);
  const Duration delay = profile_.draw(rs);
  Packet reply;
  reply.id = iot_packet_id(*uplink.txn, 255);
  reply.size_bytes = reply_bytes_;
  reply.ac = uplink.ac;
  reply.direction = Direction::downlink;
  reply.kind = PacketKind::data;
  reply.src = kWiredNode;
  reply.dst = uplink.src;
  reply.txn = uplink.txn;
  sim_.schedule_at(t3 + delay, "server.reply", [this, reply = std::move(reply), t3]() mutable {
    const SimTime t6 = sim_.now();
    const Packet copy = reply;
    ap_.enqueue_downlink(std::move(reply));
    if (on_arrival_) on_arrival_(copy, t3, t6);
  });
}

void DelayModel::validate() const {
  if (scaler.size() != model.width()) throw ModelError("scaler and model disagree on the feature count");
  if (model.width() < 2 || (model.width() - 2) % kFeaturesPerSample != 0) {
    throw ModelError("model width does not match any history depth");
  }
  if (k != (model.width() - 2) / kFeaturesPerSample) throw ModelError("history depth does not match the model");
}

double DelayModel::predict_dc_us(const FeatureVector& v) const {
  return clamp_dc_us(model.predict(scaler.scale(v.flatten())));
}

Scheduler::Scheduler(Simulator& sim, AccessPoint& ap, Collector& collector, SchedulerConfig config,
                     const DelayModel* model)
    : sim_(sim), ap_(ap), collector_(collector), config_(config), model_(model) {
  if (config_.processing_delay_us < 0) throw std::invalid_argument("processing delay must be >= 0");
  if (model_) model_->validate();
}

std::optional<double> Scheduler::db_estimate(NodeId station) const {
  auto it = db_.find(station);
  return it == db_.end() ? std::nullopt : it->second.estimate();
}

void Scheduler::on_uplink(const Packet& uplink, SimTime now) {
  if (!uplink.txn || uplink.kind != PacketKind::data) return;
  PredictionRecord rec;
  rec.txn = *uplink.txn;
  rec.station = uplink.src;
  rec.ac = uplink.ac;
  rec.at = now;
  rec.da_us = ap_.delta_a_us();
  rec.db_estimate_us = db_estimate(uplink.src);
  if (rec.db_estimate_us) {
    const std::size_t k = model_ ? model_->k : config_.k;
    rec.features = collector_.assemble_vector(k, uplink.ac, rec.da_us + *rec.db_estimate_us);
  }
  if (model_ && rec.features) {
    rec.dc_pred_us = model_->predict_dc_us(*rec.features);
    rec.sigma_us = model_->residuals.sigma_us(uplink.ac, model_->fallback_sigma_us);
    bool clamped = false;
    rec.control = ControlPacket::from_us(rec.da_us, *rec.db_estimate_us, *rec.dc_pred_us, *rec.sigma_us, &clamped);
    rec.clamped = clamped;
    Packet c;
    c.id = control_packet_id(rec.txn);
    c.size_bytes = static_cast<std::int64_t>(ControlPacket::kPayloadBytes);
    c.ac = AccessCategory::VO;
    c.direction = Direction::downlink;
    c.kind = PacketKind::control;
    c.src = kApNode;
    c.dst = uplink.src;
    c.txn = rec.txn;
    c.payload = encode_payload(*rec.control);
    sim_.schedule_in(config_.processing_delay_us, "scheduler.control", [this, c = std::move(c)]() mutable {
      ap_.inject_control(std::move(c));
    });
    ++controls_sent_;
  }
  records_[rec.txn] = std::move(rec);
}

void Scheduler::on_reply_arrival(const Packet& reply, SimTime t3, SimTime t6) {
  if (!reply.txn) return;
  auto [it, fresh] = db_.try_emplace(reply.dst, EwmaEstimator(config_.ewma_alpha));
  it->second.update(static_cast<double>(t6 - t3));
  auto r = records_.find(*reply.txn);
  if (r != records_.end()) {
    r->second.t3 = t3;
    r->second.t6 = t6;
  }
}

const PredictionRecord* Scheduler::record(std::uint64_t txn) const {
  auto it = records_.find(txn);
  return it == records_.end() ? nullptr : &it->second;
}

std::optional<PredictionRecord> Scheduler::take(std::uint64_t txn) {
  auto it = records_.find(txn);
  if (it == records_.end()) return std::nullopt;
  return std::move(records_.extract(it).mapped());
}

}  // namespace eaps
