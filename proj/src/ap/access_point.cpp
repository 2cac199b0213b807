#include "eaps/ap/access_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace eaps {

void ApConfig::validate() const {
  if (beacon_interval_us <= 0) throw std::invalid_argument("beacon interval must be positive");
  if (!(wired_rate_bps > 0)) throw std::invalid_argument("wired rate must be positive");
  if (band_capacity == 0) throw std::invalid_argument("qdisc band capacity must be positive");
  if (mac_queue_capacity == 0) throw std::invalid_argument("driver queue capacity must be positive");
  if (beacon_bytes <= 0) throw std::invalid_argument("beacon size must be positive");
}

// One driver queue per access category. Frames are kept per destination and
// served round robin; frames for dozing stations are skipped unless released
// by a poll or trigger.
class AccessPoint::AcQueue : public FrameSource {
 public:
  AcQueue(AccessPoint& ap, AccessCategory ac) : ap_(ap), ac_(ac) {}

  ContenderId id = 0;

  std::size_t size() const { return size_; }
  bool in_flight_to(NodeId sta) const { return inflight_ && *inflight_ == sta; }

  void push_back(Packet p) {
    const NodeId dst = p.dst;
    per_sta_[dst].push_back(std::move(p));
    arrival_[dst].push_back(next_seq_++);
    ++size_;
  }

  /// Serve `sta` next (used for released power-save frames).
  void prefer(NodeId sta) { rr_next_ = sta; }

  /// Removes and returns `sta`'s unreleased frames, leaving an in-flight one.
  std::vector<Packet> extract_unreleased(NodeId sta) {
    std::vector<Packet> out;
    auto it = per_sta_.find(sta);
    if (it == per_sta_.end()) return out;
    std::deque<Packet> keep;
    std::deque<std::uint64_t> keep_seq;
    auto& seqs = arrival_[sta];
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      Packet& p = it->second[i];
      const bool pinned = i == 0 && in_flight_to(sta);
      if (pinned || p.ps_release) {
        keep.push_back(std::move(p));
        keep_seq.push_back(seqs[i]);
      } else {
        out.push_back(std::move(p));
      }
    }
    it->second = std::move(keep);
    seqs = std::move(keep_seq);
    size_ -= out.size();
    return out;
  }

  Packet* head() override {
    const auto sta = pick();
    return sta ? &per_sta_[*sta].front() : nullptr;
  }

  Packet take_head() override {
    const auto sta = pick();
    if (!sta) throw std::logic_error("take_head on an empty driver queue");
    auto& q = per_sta_[*sta];
    Packet p = std::move(q.front());
    q.pop_front();
    arrival_[*sta].pop_front();
    --size_;
    inflight_.reset();
    rr_next_ = *sta + 1;
    return p;
  }

  void on_tx_start(const Packet& /*frame*/, SimTime /*start*/, SimTime /*end*/) override { inflight_ = pick(); }
  void on_delivered(Packet&& frame, SimTime start, SimTime end) override {
    ap_.delivered(std::move(frame), start, end);
  }
  void on_dropped(Packet&& frame, SimTime now) override { ap_.dropped(std::move(frame), now); }
  void on_attempt_failed(const Packet& /*frame*/, SimTime /*now*/) override { ++ap_.stats_.retransmissions; }

 private:
  bool sendable(NodeId sta, const Packet& p) const { return p.ps_release || !ap_.station_dozing(sta); }

  std::optional<NodeId> pick() const {
    if (inflight_) return inflight_;
    if (!ap_.config_.driver_round_robin) return oldest();
    auto scan = [&](auto b, auto e) -> std::optional<NodeId> {
      for (auto it = b; it != e; ++it) {
        if (!it->second.empty() && sendable(it->first, it->second.front())) return it->first;
      }
      return std::nullopt;
    };
    const auto mid = per_sta_.lower_bound(rr_next_);
    if (auto s = scan(mid, per_sta_.end())) return s;
    return scan(per_sta_.begin(), mid);
  }

  /// FIFO across stations; released power-save frames go first.
  std::optional<NodeId> oldest() const {
    std::optional<NodeId> best;
    std::uint64_t best_seq = 0;
    bool best_released = false;
    for (const auto& [sta, q] : per_sta_) {
      if (q.empty() || !sendable(sta, q.front())) continue;
      const std::uint64_t seq = arrival_.at(sta).front();
      const bool released = q.front().ps_release;
      if (!best || (released && !best_released) || (released == best_released && seq < best_seq)) {
        best = sta;
        best_seq = seq;
        best_released = released;
      }
    }
    return best;
  }

  AccessPoint& ap_;
  AccessCategory ac_;
  std::map<NodeId, std::deque<Packet>> per_sta_;
  std::map<NodeId, std::deque<std::uint64_t>> arrival_;  // push order, parallel to per_sta_
  std::uint64_t next_seq_ = 0;
  std::size_t size_ = 0;
  std::optional<NodeId> inflight_;
  NodeId rr_next_ = 0;
};

class AccessPoint::BeaconSource : public FrameSource {
 public:
  explicit BeaconSource(AccessPoint& ap) : ap_(ap) {}

  ContenderId id = 0;

  void push(Packet p, SimTime tbtt) {
    // A beacon that never got the medium is superseded by the next one.
    if (!q_.empty() && !on_air_) {
      q_.pop_front();
      tbtt_.pop_front();
    }
    q_.push_back(std::move(p));
    tbtt_.push_back(tbtt);
  }

  Packet* head() override { return q_.empty() ? nullptr : &q_.front(); }
  Packet take_head() override {
    Packet p = std::move(q_.front());
    q_.pop_front();
    tbtt_.pop_front();
    on_air_ = false;
    return p;
  }

  void on_tx_start(const Packet& /*frame*/, SimTime start, SimTime /*end*/) override {
    on_air_ = true;
    tim_.clear();
    for (const auto& [sta, buf] : ap_.ps_buffer_) {
      if (!buf.empty()) tim_.insert(sta);
    }
    if (ap_.on_beacon_) ap_.on_beacon_(tbtt_.front(), start);
  }

  void on_delivered(Packet&& /*frame*/, SimTime start, SimTime end) override {
    ++ap_.stats_.beacons;
    for (const auto& [sta, port] : ap_.stations_) port->on_beacon(tim_.count(sta) != 0, start, end);
  }
  void on_dropped(Packet&& /*frame*/, SimTime /*now*/) override { on_air_ = false; }

 private:
  AccessPoint& ap_;
  std::deque<Packet> q_;
  std::deque<SimTime> tbtt_;
  std::set<NodeId> tim_;
  bool on_air_ = false;
};

AccessPoint::AccessPoint(Simulator& sim, Channel& channel, ApConfig config)
    : sim_(sim), channel_(channel), config_(config), qdisc_(config.band_capacity) {
  config_.validate();
  beacon_ = std::make_unique<BeaconSource>(*this);
  beacon_->id = channel_.add_contender(kApNode, AccessCategory::VO, beacon_.get(),
                                       ContenderOptions{true, true, channel_.config().phy.basic_rate_bps});
  for (AccessCategory ac : kAcsByPriority) {
    auto q = std::make_unique<AcQueue>(*this, ac);
    q->id = channel_.add_contender(kApNode, ac, q.get());
    queues_[index_of(ac)] = std::move(q);
  }
}

AccessPoint::~AccessPoint() = default;

void AccessPoint::attach_station(NodeId id, StationPort* port) {
  if (id == kApNode || id == kWiredNode || id == kBroadcast) throw std::invalid_argument("reserved station id");
  stations_[id] = port;
}

StationPort* AccessPoint::port(NodeId id) const {
  auto it = stations_.find(id);
  return it == stations_.end() ? nullptr : it->second;
}

void AccessPoint::start() {
  sim_.schedule_at(next_tbtt(sim_.now()), "ap.beacon", [this] { send_beacon(sim_.now()); });
}

SimTime AccessPoint::next_tbtt(SimTime t) const {
  const Duration bi = config_.beacon_interval_us;
  if (t <= 0) return 0;
  return ((t + bi - 1) / bi) * bi;
}

void AccessPoint::send_beacon(SimTime tbtt) {
  Packet b;
  b.id = (PacketId(3) << 40) + static_cast<PacketId>(tbtt / config_.beacon_interval_us);
  b.size_bytes = config_.beacon_bytes;
  b.ac = AccessCategory::VO;
  b.kind = PacketKind::beacon;
  b.src = kApNode;
  b.dst = kBroadcast;
  beacon_->push(std::move(b), tbtt);
  channel_.notify(beacon_->id);
  sim_.schedule_at(tbtt + config_.beacon_interval_us, "ap.beacon",
                   [this, next = tbtt + config_.beacon_interval_us] { send_beacon(next); });
}

AccessCategory AccessPoint::mac_ac(const Packet& p) {
  return p.kind == PacketKind::control ? AccessCategory::VO : p.ac;
}

void AccessPoint::enqueue_downlink(Packet p) {
  const SimTime now = sim_.now();
  ingress_bytes_ += p.size_bytes;
  ingress_log_.emplace_back(now, ingress_bytes_);
  while (!ingress_log_.empty() && ingress_log_.front().first < now - 2 * kSecond) {
    ingress_pruned_ = ingress_log_.front().second;
    ingress_log_.pop_front();
  }
  if (p.txn && p.kind == PacketKind::data) p.stamp(Stamp::t6, now);
  p.direction = Direction::downlink;
  p.src = kApNode;
  ++stats_.downlink_enqueued;
  if (qdisc_.occupancy(PrioQdisc::band_of(p)) >= qdisc_.capacity()) {
    const Packet lost = p;
    qdisc_.enqueue(std::move(p));  // counted as the band's tail drop
    ++stats_.dropped_qdisc;
    if (StationPort* sp = port(lost.dst)) sp->on_downlink_lost(lost, now);
    return;
  }
  qdisc_.enqueue(std::move(p));
  pump();
}

void AccessPoint::inject_control(Packet p) {
  p.kind = PacketKind::control;
  p.direction = Direction::downlink;
  p.src = kApNode;
  ++stats_.downlink_enqueued;
  qdisc_.enqueue(std::move(p));
  pump();
}

void AccessPoint::pump() {
  const SimTime now = sim_.now();
  while (const Packet* h = qdisc_.head()) {
    const NodeId dst = h->dst;
    const bool buffer = station_dozing(dst) && !h->ps_release;
    if (buffer) {
      Packet p = qdisc_.pop();
      if (on_ready_ && p.txn && p.kind == PacketKind::data) on_ready_(p, now);
      ++stats_.ps_buffered;
      ps_buffer_[dst].push_back(std::move(p));
      continue;
    }
    AcQueue& q = queue_for(mac_ac(*h));
    if (q.size() >= config_.mac_queue_capacity) break;  // head-of-line blocks lower bands too
    Packet p = qdisc_.pop();
    if (on_ready_ && p.txn && p.kind == PacketKind::data) on_ready_(p, now);
    q.push_back(std::move(p));
    channel_.notify(q.id);
  }
}

void AccessPoint::delivered(Packet&& frame, SimTime start, SimTime end) {
  ++stats_.delivered;
  if (frame.txn && frame.kind == PacketKind::data) frame.stamp(Stamp::t8, end);
  const NodeId dst = frame.dst;
  pump();
  if (StationPort* p = port(dst)) p->on_downlink(std::move(frame), start, end);
}

void AccessPoint::dropped(Packet&& frame, SimTime now) {
  ++stats_.dropped_retry;
  const NodeId dst = frame.dst;
  pump();
  if (StationPort* p = port(dst)) p->on_downlink_lost(frame, now);
}

void AccessPoint::receive_uplink(Packet&& p, SimTime end) {
  ++stats_.uplinks_received;
  switch (p.kind) {
    case PacketKind::data:
      if (p.dst != kWiredNode) return;
      if (on_uplink_) on_uplink_(p, end);
      egress_.push_back(std::move(p));
      if (!egress_busy_) start_egress();
      return;
    case PacketKind::null_trigger: {
      const std::size_t n = handle_apsd_trigger(p.src);
      if (StationPort* sp = port(p.src)) sp->on_poll_response(n, end);
      return;
    }
    case PacketKind::ps_poll: {
      const std::size_t n = handle_ps_poll(p.src);
      if (StationPort* sp = port(p.src)) sp->on_poll_response(n, end);
      return;
    }
    default:
      return;
  }
}

void AccessPoint::start_egress() {
  if (egress_.empty()) {
    egress_busy_ = false;
    return;
  }
  egress_busy_ = true;
  const Packet& head = egress_.front();
  const double t = wired_tx_time_us(head.size_bytes, config_.wired_h_mac, config_.wired_h_phy, config_.wired_rate_bps);
  const Duration d = std::max<Duration>(1, static_cast<Duration>(std::llround(t)));
  sim_.schedule_in(d, "ap.wired_egress", [this] {
    Packet p = std::move(egress_.front());
    egress_.pop_front();
    const SimTime now = sim_.now();
    if (p.txn) p.stamp(Stamp::t3, now);
    ++stats_.wired_departures;
    if (on_egress_) on_egress_(std::move(p), now);
    start_egress();
  });
}

std::vector<std::int64_t> AccessPoint::wired_backlog_sizes() const {
  std::vector<std::int64_t> sizes;
  sizes.reserve(egress_.size());
  for (const Packet& p : egress_) sizes.push_back(p.size_bytes);
  return sizes;
}

double AccessPoint::delta_a_us() const {
  return compute_delta_a_us(wired_backlog_sizes(), config_.wired_h_mac, config_.wired_h_phy, config_.wired_rate_bps);
}

std::size_t AccessPoint::mac_occupancy(AccessCategory ac) const { return queues_[index_of(ac)]->size(); }

std::size_t AccessPoint::ps_buffered(NodeId id) const {
  auto it = ps_buffer_.find(id);
  return it == ps_buffer_.end() ? 0 : it->second.size();
}

std::int64_t AccessPoint::wired_bytes_between(SimTime a, SimTime b) const {
  if (b <= a) return 0;
  // Cumulative bytes of arrivals strictly before t.
  auto before = [this](SimTime t) -> std::int64_t {
    auto it = std::lower_bound(ingress_log_.begin(), ingress_log_.end(), t,
                               [](const auto& e, SimTime v) { return e.first < v; });
    return it == ingress_log_.begin() ? ingress_pruned_ : std::prev(it)->second;
  };
  return before(b) - before(a);
}

std::size_t AccessPoint::in_system() const {
  std::size_t n = 0;
  for (std::size_t b = 0; b < PrioQdisc::kBands; ++b) n += qdisc_.occupancy(b);
  for (const auto& q : queues_) n += q->size();
  for (const auto& [sta, buf] : ps_buffer_) n += buf.size();
  return n;
}

bool AccessPoint::frame_in_flight_to(NodeId id) const {
  for (const auto& q : queues_) {
    if (q->in_flight_to(id)) return true;
  }
  return false;
}

void AccessPoint::set_station_dozing(NodeId id, bool dozing) {
  if (dozing) {
    if (!dozing_.insert(id).second) return;
    std::vector<Packet> moved;
    for (AccessCategory ac : kAcsByPriority) {
      auto frames = queue_for(ac).extract_unreleased(id);
      for (Packet& p : frames) moved.push_back(std::move(p));
    }
    if (moved.empty()) return;
    auto& buf = ps_buffer_[id];
    stats_.ps_buffered += moved.size();
    buf.insert(buf.begin(), std::make_move_iterator(moved.begin()), std::make_move_iterator(moved.end()));
    pump();  // driver queue space was freed
    return;
  }
  if (dozing_.erase(id) == 0) return;
  auto it = ps_buffer_.find(id);
  if (it != ps_buffer_.end()) {
    while (!it->second.empty()) {
      Packet p = std::move(it->second.front());
      it->second.pop_front();
      AcQueue& q = queue_for(mac_ac(p));
      q.push_back(std::move(p));
    }
  }
  for (auto& q : queues_) channel_.notify(q->id);
}

void AccessPoint::release(NodeId id, std::size_t max_frames, std::size_t& released) {
  auto it = ps_buffer_.find(id);
  if (it == ps_buffer_.end()) return;
  while (released < max_frames && !it->second.empty()) {
    Packet p = std::move(it->second.front());
    it->second.pop_front();
    p.ps_release = true;
    AcQueue& q = queue_for(mac_ac(p));
    q.push_back(std::move(p));
    q.prefer(id);
    channel_.notify(q.id);
    ++released;
  }
}

std::size_t AccessPoint::handle_apsd_trigger(NodeId id) {
  std::size_t n = 0;
  release(id, std::numeric_limits<std::size_t>::max(), n);
  return n;
}

std::size_t AccessPoint::handle_ps_poll(NodeId id) {
  std::size_t n = 0;
  release(id, 1, n);
  return n;
}

void AccessPoint::write_stats_csv(std::ostream& out) const {
  static constexpr const char* kBandNames[PrioQdisc::kBands] = {"control", "vo", "vi", "be", "bk"};
  out << "metric,value\n";
  out << "beacons," << stats_.beacons << '\n';
  out << "downlink_enqueued," << stats_.downlink_enqueued << '\n';
  out << "delivered," << stats_.delivered << '\n';
  out << "dropped_retry," << stats_.dropped_retry << '\n';
  out << "dropped_qdisc," << stats_.dropped_qdisc << '\n';
  out << "retransmissions," << stats_.retransmissions << '\n';
  out << "ps_buffered," << stats_.ps_buffered << '\n';
  out << "uplinks_received," << stats_.uplinks_received << '\n';
  out << "wired_departures," << stats_.wired_departures << '\n';
  for (std::size_t b = 0; b < PrioQdisc::kBands; ++b) {
    out << "dropped_capacity_" << kBandNames[b] << ',' << qdisc_.drops(b) << '\n';
  }
  for (std::size_t b = 0; b < PrioQdisc::kBands; ++b) {
    out << "max_occupancy_" << kBandNames[b] << ',' << qdisc_.max_occupancy(b) << '\n';
  }
}

}  // namespace eaps
