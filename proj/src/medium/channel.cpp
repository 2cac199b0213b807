#include "eaps/medium/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace eaps {

// ---------------------------------------------------------------------------
// BusyMeter

void BusyMeter::add(SimTime start, SimTime end) {
  if (end <= start) return;
  if (!intervals_.empty() && start < intervals_.back().end) {
    throw std::logic_error("overlapping airtime on the channel");
  }
  intervals_.push_back(Interval{start, end, total_});
  total_ += end - start;
}

Duration BusyMeter::busy_before(SimTime t) const {
  // Last interval starting before t.
  auto it = std::upper_bound(intervals_.begin(), intervals_.end(), t,
                             [](SimTime v, const Interval& iv) { return v <= iv.start; });
  if (it == intervals_.begin()) return pruned_;
  --it;
  return it->cum_before + (std::min(it->end, t) - it->start);
}

Duration BusyMeter::busy_between(SimTime a, SimTime b) const {
  if (b <= a) return 0;
  return busy_before(b) - busy_before(a);
}

void BusyMeter::prune(SimTime t) {
  while (!intervals_.empty() && intervals_.front().end < t) {
    pruned_ = intervals_.front().cum_before + (intervals_.front().end - intervals_.front().start);
    intervals_.pop_front();
  }
}

double quantized_utilization(Duration busy_us, Duration window_us) {
  if (window_us <= 0) throw std::invalid_argument("utilization window must be positive");
  const Duration busy_ms = std::max<Duration>(0, busy_us) / 1000;
  const double pct = static_cast<double>(busy_ms * 1000) * 100.0 / static_cast<double>(window_us);
  return std::clamp(pct, 0.0, 100.0);
}

// ---------------------------------------------------------------------------
// Channel

Channel::Channel(Simulator& sim, const Rng& rng, ChannelConfig config)
    : sim_(sim), rng_(rng), config_(std::move(config)) {
  config_.edca.validate();
}

ContenderId Channel::add_contender(NodeId device, AccessCategory ac, FrameSource* source,
                                   ContenderOptions options) {
  Contender c{};
  c.device = device;
  c.ac = ac;
  c.params = config_.edca[ac];
  c.aifs = options.pifs_access ? config_.edca.pifs() : config_.edca.aifs(ac);
  c.source = source;
  c.options = options;
  c.cw = options.pifs_access ? 0 : c.params.cw_min;
  contenders_.push_back(c);
  return contenders_.size() - 1;
}

double Channel::noise_dbm() const {
  const double excursion = interference_active() ? noise_excursion_db_ : 0.0;
  return std::clamp(config_.noise_floor_dbm + excursion, config_.noise_floor_dbm, config_.noise_ceiling_dbm);
}

double Channel::loss_probability() const {
  const double span = config_.noise_ceiling_dbm - config_.noise_floor_dbm;
  const double rel = span > 0 ? (noise_dbm() - config_.noise_floor_dbm) / span : 0.0;
  return std::clamp(config_.loss_prob + config_.loss_noise_coupling * rel, 0.0, 1.0);
}

double Channel::sample_utilization(Duration window_us) const {
  const SimTime now = sim_.now();
  return quantized_utilization(busy_.busy_between(now - window_us, now), window_us);
}

void Channel::draw_backoff(Contender& c) {
  if (c.options.pifs_access) {
    c.backoff = 0;
    return;
  }
  if (forced_backoff_) {
    c.backoff = std::min(*forced_backoff_, c.cw);
    ++c.draws;
    return;
  }
  const Packet* frame = c.source->head();
  const std::uint64_t key = mix64(frame ? frame->id : 0) ^ mix64((std::uint64_t(c.device) << 8) | index_of(c.ac)) ^
                            (std::uint64_t(c.draws) << 40);
  RandomStream draw = rng_.derive("channel.backoff", key);
  c.backoff = static_cast<int>(draw.uniform_int(0, c.cw));
  ++c.draws;
}

bool Channel::draw_loss(const Contender& c, const Packet& frame) {
  const double p = loss_probability();
  if (p <= 0) return false;
  if (p >= 1) return true;
  const std::uint64_t key = mix64(frame.id) ^ mix64((std::uint64_t(c.device) << 8) | index_of(c.ac)) ^
                            (std::uint64_t(frame.retry_count) << 48);
  RandomStream draw = rng_.derive("channel.loss", key);
  return draw.bernoulli(p);
}

void Channel::activate(Contender& c) {
  if (c.active || c.source->head() == nullptr) return;
  c.active = true;
  c.draws = 0;
  c.cw = c.options.pifs_access ? 0 : c.params.cw_min;
  draw_backoff(c);
  c.ref = sim_.now();
}

void Channel::notify(ContenderId id) {
  Contender& c = contenders_.at(id);
  if (c.active) return;
  activate(c);
  if (c.active) reschedule();
}

SimTime Channel::access_time(const Contender& c) const {
  return std::max(c.ref, busy_until_) + c.aifs + static_cast<Duration>(c.backoff) * config_.edca.slot_us;
}

void Channel::freeze(SimTime t) {
  for (Contender& c : contenders_) {
    if (!c.active) continue;
    const SimTime countdown_start = std::max(c.ref, busy_until_) + c.aifs;
    if (t > countdown_start) {
      const auto elapsed = static_cast<int>((t - countdown_start) / config_.edca.slot_us);
      c.backoff = std::max(0, c.backoff - elapsed);
    }
    c.ref = 0;
  }
}

void Channel::reschedule() {
  if (resolution_) {
    sim_.cancel(*resolution_);
    resolution_.reset();
  }
  if (in_exchange_) return;
  SimTime best = std::numeric_limits<SimTime>::max();
  for (const Contender& c : contenders_) {
    if (c.active) best = std::min(best, access_time(c));
  }
  if (best == std::numeric_limits<SimTime>::max()) return;
  best = std::max(best, sim_.now());
  resolution_ = sim_.schedule_at(best, "channel.access", [this, best] { resolve(best); });
}

Duration Channel::airtime(const Contender& c, const Packet& frame) const {
  const double rate = c.options.rate_bps > 0 ? c.options.rate_bps : config_.phy.data_rate_bps;
  return config_.phy.frame_airtime(frame.size_bytes, rate);
}

Duration Channel::exchange_duration(const Contender& c, const Packet& frame) const {
  const Duration air = airtime(c, frame);
  if (c.options.broadcast) return air;
  return air + config_.edca.sifs_us + config_.phy.ack_airtime();
}

void Channel::resolve(SimTime t) {
  resolution_.reset();
  std::vector<ContenderId> ready;
  for (ContenderId id = 0; id < contenders_.size(); ++id) {
    Contender& c = contenders_[id];
    if (!c.active || access_time(c) != t) continue;
    if (c.source->head() == nullptr) {
      c.active = false;  // the owner withdrew the frame
      continue;
    }
    ready.push_back(id);
  }
  if (ready.empty()) {
    reschedule();
    return;
  }
  // Non-winners count down the slots that elapsed; everyone restarts AIFS
  // after this exchange.
  freeze(t);

  // Internal collisions: per device only the highest AC proceeds.
  std::map<NodeId, ContenderId> per_device;
  for (ContenderId id : ready) {
    auto [it, inserted] = per_device.emplace(contenders_[id].device, id);
    if (!inserted) {
      ContenderId& holder = it->second;
      ContenderId loser = id;
      if (contenders_[id].ac > contenders_[holder].ac) std::swap(holder, loser);
      Contender& l = contenders_[loser];
      l.cw = std::min(2 * l.cw + 1, l.params.cw_max);
      draw_backoff(l);
      ++stats_.internal_collisions;
    }
  }

  std::vector<Attempt> attempts;
  for (const auto& [device, id] : per_device) {
    (void)device;
    attempts.push_back(Attempt{id, airtime(contenders_[id], *contenders_[id].source->head())});
  }
  start_exchange(std::move(attempts), t, t);
}

void Channel::start_exchange(std::vector<Attempt> attempts, SimTime start, SimTime txop_start) {
  Duration duration = 0;
  for (const Attempt& a : attempts) {
    const Contender& c = contenders_[a.id];
    duration = std::max(duration, exchange_duration(c, *c.source->head()));
  }
  bool success = attempts.size() == 1;
  if (success) {
    const Contender& c = contenders_[attempts.front().id];
    if (!c.options.broadcast) success = !draw_loss(c, *c.source->head());
  } else {
    ++stats_.collisions;
  }
  in_exchange_ = true;
  busy_.add(start, start + duration);
  busy_.prune(start - config_.busy_history_us);
  busy_until_ = start + duration;
  ++stats_.exchanges;
  stats_.granted_airtime_us += duration;
  for (const Attempt& a : attempts) {
    const Contender& c = contenders_[a.id];
    c.source->on_tx_start(*c.source->head(), start, start + a.airtime);
  }
  sim_.schedule_at(start + duration, "channel.exchange_end",
                   [this, attempts = std::move(attempts), success, start, txop_start]() mutable {
                     end_exchange(std::move(attempts), success, start, txop_start);
                   });
}

void Channel::end_exchange(std::vector<Attempt> attempts, bool success, SimTime start, SimTime txop_start) {
  const SimTime now = sim_.now();
  for (const Attempt& a : attempts) {
    Contender& c = contenders_[a.id];
    if (success || c.options.broadcast) {
      Packet frame = c.source->take_head();
      ++c.grants;
      c.active = false;
      c.source->on_delivered(std::move(frame), start, start + a.airtime);
      continue;
    }
    Packet* head = c.source->head();
    ++stats_.failed_attempts;
    c.source->on_attempt_failed(*head, now);
    if (head->retry_count >= config_.edca.retry_limit) {
      Packet frame = c.source->take_head();
      ++stats_.drops;
      c.active = false;
      c.source->on_dropped(std::move(frame), now);
    } else {
      ++head->retry_count;
      c.active = true;
      c.cw = std::min(2 * c.cw + 1, c.params.cw_max);
      draw_backoff(c);
      c.ref = 0;
    }
  }

  // Continue a TXOP with the next frame of the same queue if it fits.
  if (success && attempts.size() == 1) {
    Contender& c = contenders_[attempts.front().id];
    Packet* next = c.source->head();
    if (next != nullptr && c.params.txop_limit_us > 0 && !c.options.broadcast) {
      const SimTime next_start = now + config_.edca.sifs_us;
      if (next_start + exchange_duration(c, *next) - txop_start <= c.params.txop_limit_us) {
        // The medium stays reserved through the SIFS gap.
        busy_until_ = next_start;
        std::vector<Attempt> cont{Attempt{attempts.front().id, airtime(c, *next)}};
        sim_.schedule_at(next_start, "channel.txop_next", [this, cont = std::move(cont), next_start, txop_start]() mutable {
          start_exchange(std::move(cont), next_start, txop_start);
        });
        return;
      }
    }
  }

  in_exchange_ = false;
  if (!pending_bursts_.empty()) {
    start_pending_burst();
    return;
  }
  for (Contender& c : contenders_) activate(c);
  reschedule();
}

void Channel::interferer_burst(Duration on_us, double excursion_db, std::function<void(SimTime)> on_end) {
  if (on_us <= 0) {
    if (on_end) on_end(sim_.now());
    return;
  }
  if (in_exchange_ || interference_active() || !pending_bursts_.empty()) {
    pending_bursts_.push_back(PendingBurst{on_us, excursion_db, std::move(on_end)});
    return;
  }
  begin_interference(on_us, excursion_db, std::move(on_end));
}

void Channel::start_pending_burst() {
  PendingBurst b = std::move(pending_bursts_.front());
  pending_bursts_.pop_front();
  begin_interference(b.on_us, b.excursion_db, std::move(b.on_end));
}

void Channel::begin_interference(Duration on_us, double excursion_db, std::function<void(SimTime)> on_end) {
  const SimTime now = sim_.now();
  freeze(now);
  if (resolution_) {
    sim_.cancel(*resolution_);
    resolution_.reset();
  }
  busy_.add(now, now + on_us);
  busy_.prune(now - config_.busy_history_us);
  busy_until_ = std::max(busy_until_, now + on_us);
  interference_until_ = now + on_us;
  noise_excursion_db_ = excursion_db;
  stats_.interferer_busy_us += on_us;
  sim_.schedule_at(now + on_us, "channel.interference_end", [this, on_end = std::move(on_end)] {
    if (on_end) on_end(sim_.now());
    if (!pending_bursts_.empty() && !in_exchange_) {
      start_pending_burst();
      return;
    }
    for (Contender& c : contenders_) activate(c);
    reschedule();
  });
}

}  // namespace eaps
