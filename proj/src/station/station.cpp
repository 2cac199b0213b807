#include "eaps/station/station.hpp"

#include <algorithm>
#include <stdexcept>

namespace eaps {

std::string_view to_string(Discipline d) {
  switch (d) {
    case Discipline::CAM: return "CAM";
    case Discipline::PSM: return "PSM";
    case Discipline::APSM: return "APSM";
    case Discipline::APSD_POLL: return "APSD_POLL";
    case Discipline::EAPS_E: return "EAPS_E";
    case Discipline::EAPS_M: return "EAPS_M";
    case Discipline::EAPS_L: return "EAPS_L";
  }
  return "?";
}

std::optional<Discipline> parse_discipline(std::string_view raw) {
  std::string text(raw);
  for (char& c : text) {
    if (c == '-') c = '_';
  }
  for (Discipline d : {Discipline::CAM, Discipline::PSM, Discipline::APSM, Discipline::APSD_POLL, Discipline::EAPS_E,
                       Discipline::EAPS_M, Discipline::EAPS_L}) {
    if (text == to_string(d)) return d;
  }
  if (text == "APSD") return Discipline::APSD_POLL;
  if (text == "EAPS") return Discipline::EAPS_M;
  return std::nullopt;
}

std::string format_flags(std::uint32_t flags) {
  static constexpr std::pair<std::uint32_t, const char*> kNames[] = {
      {txn_flags::uplink_dropped, "uplink_dropped"}, {txn_flags::control_timeout, "control_timeout"},
      {txn_flags::no_prediction, "no_prediction"},   {txn_flags::timeout, "timeout"},
      {txn_flags::downlink_lost, "downlink_lost"},   {txn_flags::degraded, "degraded"},
      {txn_flags::schedule_clamped, "schedule_clamped"},
  };
  std::string out;
  for (const auto& [bit, name] : kNames) {
    if ((flags & bit) == 0) continue;
    if (!out.empty()) out += '|';
    out += name;
  }
  return out;
}

void StationConfig::validate() const {
  power.validate();
  if (apsm_tail_us < 0) throw std::invalid_argument("APSM tail must be >= 0");
  if (apsd_poll_interval_us <= 0) throw std::invalid_argument("APSD poll interval must be positive");
  if (control_timeout_us <= 0) throw std::invalid_argument("control timeout must be positive");
  if (transaction_timeout_us <= 0) throw std::invalid_argument("transaction timeout must be positive");
  if (null_frame_bytes < 0) throw std::invalid_argument("null frame size must be >= 0");
}

namespace {

bool dozes_between_transactions(Discipline d) { return d != Discipline::CAM; }

}  // namespace

Station::Station(Simulator& sim, Channel& channel, AccessPoint& ap, NodeId id, StationConfig config)
    : sim_(sim), ap_(ap), id_(id), config_(config), meter_(config.power) {
  config_.validate();
  for (AccessCategory ac : kAcsByPriority) {
    queues_[index_of(ac)] = std::make_unique<TxQueue>(channel, id_, ac, static_cast<TxQueueOwner*>(this));
  }
  ap_.attach_station(id_, this);
  go_idle_between_transactions();
}

Station::~Station() = default;

Duration Station::eaps_sleep_us(const ControlPacket& ctrl, Discipline variant, Duration elapsed_us) {
  const Duration predicted = ctrl.predicted_total_us();
  const Duration margin = 2 * ctrl.sigma_us();
  Duration target = predicted;
  if (variant == Discipline::EAPS_L) {
    target = predicted + margin;
  } else if (variant == Discipline::EAPS_E && predicted - margin > elapsed_us) {
    target = predicted - margin;
  }
  return target - elapsed_us;
}

void Station::start_transaction(std::uint64_t txn_id, AccessCategory ac, std::int64_t uplink_bytes) {
  if (pending_) throw std::logic_error("station " + std::to_string(id_) + " already has a pending transaction");
  const SimTime now = sim_.now();
  if (wake_event_) {
    sim_.cancel(*wake_event_);
    wake_event_.reset();
  }
  wake(now);
  TransactionRecord rec;
  rec.txn_id = txn_id;
  rec.station = id_;
  rec.discipline = config_.discipline;
  rec.ac = ac;
  rec.requested = now;
  pending_ = rec;
  next_seq_ = 0;
  phase_ = Phase::uplink;
  txn_timeout_ = sim_.schedule_in(config_.transaction_timeout_us, "station.txn_timeout", [this] {
    txn_timeout_.reset();
    abort(txn_flags::timeout);
  });

  Packet up;
  up.id = iot_packet_id(txn_id, next_seq_++);
  up.size_bytes = uplink_bytes;
  up.ac = ac;
  up.direction = Direction::uplink;
  up.kind = PacketKind::data;
  up.src = id_;
  up.dst = kWiredNode;
  up.txn = txn_id;
  up.pm_doze = config_.discipline == Discipline::PSM || config_.discipline == Discipline::APSD_POLL;
  if (!queues_[index_of(ac)]->push(std::move(up))) abort(txn_flags::uplink_dropped);
}

// ---------------------------------------------------------------------------
// Radio events

void Station::on_tx(const Packet& /*frame*/, SimTime start, SimTime end) {
  meter_.reclassify(PowerMode::idle, PowerMode::tx, end - start);
}

void Station::on_sent(Packet&& frame, SimTime /*start*/, SimTime end) {
  if (frame.kind == PacketKind::data && pending_ && frame.txn == pending_->txn_id && phase_ == Phase::uplink) {
    frame.stamp(Stamp::t1, end);
    after_uplink(end);
  }
  ap_.receive_uplink(std::move(frame), end);
}

void Station::on_lost(Packet&& frame, SimTime now) {
  if (!pending_) return;
  switch (frame.kind) {
    case PacketKind::data:
      if (frame.txn == pending_->txn_id) abort(txn_flags::uplink_dropped);
      return;
    case PacketKind::ps_poll:
      if (phase_ == Phase::psm_poll) {
        phase_ = Phase::psm_doze;
        doze_until_beacon();
      }
      return;
    case PacketKind::null_trigger:
      if (phase_ == Phase::trigger_sent) on_poll_response(0, now);
      return;
    default:
      return;
  }
}

void Station::after_uplink(SimTime t1) {
  TransactionRecord& rec = *pending_;
  rec.t1 = t1;
  energy_at_t1_ = meter_.total_uj(t1);
  switch (config_.discipline) {
    case Discipline::CAM:
      ap_.set_station_dozing(id_, false);
      phase_ = Phase::awake_wait;
      return;
    case Discipline::APSM: {
      ap_.set_station_dozing(id_, false);
      phase_ = Phase::awake_wait;
      arm_timer(t1 + config_.apsm_tail_us, "station.apsm_tail", [this] {
        // A frame already on air to us counts as activity.
        if (ap_.frame_in_flight_to(id_)) {
          arm_timer(sim_.now() + config_.apsm_tail_us, "station.apsm_tail", [this] { enter_psm(); });
          return;
        }
        enter_psm();
      });
      return;
    }
    case Discipline::PSM:
      enter_psm();
      return;
    case Discipline::APSD_POLL:
      ap_.set_station_dozing(id_, true);
      poll_base_ = t1;
      phase_ = Phase::apsd_doze;
      doze_until(t1 + config_.apsd_poll_interval_us, "station.apsd_wake", [this] {
        pending_->t7 = sim_.now();
        send_null(PacketKind::null_trigger);
      });
      return;
    case Discipline::EAPS_E:
    case Discipline::EAPS_M:
    case Discipline::EAPS_L:
      ap_.set_station_dozing(id_, false);
      phase_ = Phase::control_wait;
      arm_timer(t1 + config_.control_timeout_us, "station.control_timeout", [this] {
        pending_->flags |= txn_flags::control_timeout;
        enter_psm();
      });
      return;
  }
}

void Station::send_null(PacketKind kind) {
  Packet p;
  p.id = iot_packet_id(pending_->txn_id, std::min(next_seq_++, 254u));
  p.size_bytes = config_.null_frame_bytes;
  p.direction = Direction::uplink;
  p.kind = kind;
  p.src = id_;
  p.dst = kApNode;
  p.txn = pending_->txn_id;
  // Triggers ride the voice queue; PS-Poll uses legacy (best effort) access.
  p.ac = kind == PacketKind::ps_poll ? AccessCategory::BE : AccessCategory::VO;
  phase_ = kind == PacketKind::ps_poll ? Phase::psm_poll : Phase::trigger_sent;
  queues_[index_of(p.ac)]->push(std::move(p));
}

void Station::enter_psm() {
  ap_.set_station_dozing(id_, true);
  phase_ = Phase::psm_doze;
  doze_until_beacon();
}

void Station::doze_until_beacon() {
  doze_until(ap_.next_tbtt(sim_.now()), "station.beacon_wake", [this] { phase_ = Phase::psm_listen; });
}

void Station::doze_until(SimTime wake_at, const char* tag, std::function<void()> on_wake) {
  const SimTime now = sim_.now();
  if (wake_event_) {
    sim_.cancel(*wake_event_);
    wake_event_.reset();
  }
  const Duration transition = config_.power.transition_us;
  if (wake_at - now >= 2 * transition) {
    meter_.set_mode(PowerMode::sleep, now);
    asleep_ = true;
    sleep_started_ = now;
  }
  wake_event_ = sim_.schedule_at(std::max(now, wake_at), tag, [this, fn = std::move(on_wake)] {
    wake_event_.reset();
    wake(sim_.now());
    fn();
  });
}

void Station::wake(SimTime now) {
  if (!asleep_) return;
  meter_.set_mode(PowerMode::idle, now);
  // Falling asleep and waking up each take one transition at idle power.
  meter_.reclassify(PowerMode::sleep, PowerMode::idle,
                    std::min<Duration>(2 * config_.power.transition_us, now - sleep_started_));
  asleep_ = false;
}

void Station::arm_timer(SimTime at, const char* tag, std::function<void()> fn) {
  cancel_timer();
  timer_ = sim_.schedule_at(at, tag, [this, fn = std::move(fn)] {
    timer_.reset();
    fn();
  });
}

void Station::cancel_timer() {
  if (timer_) {
    sim_.cancel(*timer_);
    timer_.reset();
  }
}

bool Station::is_pending_downlink(const Packet& frame) const {
  return pending_ && frame.kind == PacketKind::data && frame.txn == pending_->txn_id;
}

void Station::on_beacon(bool indicated, SimTime start, SimTime end) {
  if (asleep_) return;
  meter_.reclassify(PowerMode::idle, PowerMode::rx, end - start);
  if (phase_ != Phase::psm_listen || !pending_) return;
  if (indicated) {
    pending_->retrieval_beacon = start;
    pending_->t7 = end;
    send_null(PacketKind::ps_poll);
  } else {
    phase_ = Phase::psm_doze;
    doze_until_beacon();
  }
}

void Station::on_poll_response(std::size_t released, SimTime now) {
  if (!pending_) return;
  if (phase_ == Phase::psm_poll) {
    if (released > 0) {
      phase_ = Phase::retrieving;
      released_remaining_ = released;
      retrieval_via_poll_ = true;
    } else {
      phase_ = Phase::psm_doze;
      doze_until_beacon();
    }
    return;
  }
  if (phase_ != Phase::trigger_sent) return;
  if (released > 0) {
    phase_ = Phase::retrieving;
    released_remaining_ = released;
    retrieval_via_poll_ = false;
    return;
  }
  if (is_eaps(config_.discipline)) {
    // Woke before the response reached the AP: stay up and take it directly.
    ap_.set_station_dozing(id_, false);
    phase_ = Phase::awake_wait;
    return;
  }
  // APSD polling: nothing yet, sleep until the next poll instant.
  const Duration interval = config_.apsd_poll_interval_us;
  const SimTime next = poll_base_ + ((now - poll_base_) / interval + 1) * interval;
  phase_ = Phase::apsd_doze;
  doze_until(next, "station.apsd_wake", [this] {
    pending_->t7 = sim_.now();
    send_null(PacketKind::null_trigger);
  });
}

void Station::on_downlink(Packet&& frame, SimTime start, SimTime end) {
  if (asleep_) return;  // a dozing radio hears nothing
  meter_.reclassify(PowerMode::idle, PowerMode::rx, end - start);
  if (!pending_) return;
  if (is_pending_downlink(frame)) {
    if (!pending_->t7) pending_->t7 = start;
    complete(end);
    return;
  }
  if (frame.kind == PacketKind::control && frame.txn == pending_->txn_id && phase_ == Phase::control_wait) {
    cancel_timer();
    TransactionRecord& rec = *pending_;
    rec.t2 = end;
    const ControlPacket ctrl = decode(frame.payload);
    rec.control = ctrl;
    const Duration sleep = eaps_sleep_us(ctrl, config_.discipline, end - rec.t1);
    if (sleep <= 0) {
      rec.scheduled_wake = end;
      rec.t7 = end;
      send_null(PacketKind::null_trigger);
      return;
    }
    ap_.set_station_dozing(id_, true);
    phase_ = Phase::eaps_sleep;
    rec.scheduled_wake = end + sleep;
    doze_until(end + sleep, "station.eaps_wake", [this] {
      pending_->t7 = sim_.now();
      send_null(PacketKind::null_trigger);
    });
    return;
  }
  // Some other released frame (a late schedule, say).
  if (phase_ != Phase::retrieving) return;
  if (released_remaining_ > 0) --released_remaining_;
  if (released_remaining_ > 0) return;
  if (retrieval_via_poll_) {
    if (ap_.ps_buffered(id_) > 0) {
      send_null(PacketKind::ps_poll);
    } else {
      phase_ = Phase::psm_doze;
      doze_until_beacon();
    }
  } else {
    on_poll_response(0, end);
  }
}

void Station::on_downlink_lost(const Packet& frame, SimTime /*now*/) {
  if (is_pending_downlink(frame)) abort(txn_flags::downlink_lost);
}

// ---------------------------------------------------------------------------
// Transaction end

void Station::complete(SimTime t8) {
  TransactionRecord& rec = *pending_;
  rec.t8 = t8;
  rec.duration_us = t8 - rec.t1;
  rec.energy_uj = meter_.total_uj(t8) - energy_at_t1_;
  rec.completed = true;
  finish();
}

void Station::abort(std::uint32_t flag) {
  if (!pending_) return;
  TransactionRecord& rec = *pending_;
  rec.flags |= flag;
  if (phase_ != Phase::uplink) {
    rec.duration_us = sim_.now() - rec.t1;
    rec.energy_uj = meter_.total_uj(sim_.now()) - energy_at_t1_;
  }
  rec.completed = false;
  finish();
}

void Station::finish() {
  cancel_timer();
  if (txn_timeout_) {
    sim_.cancel(*txn_timeout_);
    txn_timeout_.reset();
  }
  if (wake_event_) {
    sim_.cancel(*wake_event_);
    wake_event_.reset();
  }
  TransactionRecord rec = std::move(*pending_);
  pending_.reset();
  released_remaining_ = 0;
  go_idle_between_transactions();
  if (on_complete_) on_complete_(std::move(rec));
}

void Station::go_idle_between_transactions() {
  phase_ = Phase::idle;
  if (!dozes_between_transactions(config_.discipline)) {
    ap_.set_station_dozing(id_, false);
    return;
  }
  ap_.set_station_dozing(id_, true);
  if (!asleep_) {
    meter_.set_mode(PowerMode::sleep, sim_.now());
    asleep_ = true;
    sleep_started_ = sim_.now();
  }
}

}  // namespace eaps
