#include "eaps/traffic/load_node.hpp"

#include <stdexcept>

namespace eaps {

LoadNode::LoadNode(Channel& channel, AccessPoint& ap, NodeId id, std::size_t queue_capacity) : ap_(ap), id_(id) {
  for (AccessCategory ac : kAcsByPriority) {
    queues_[index_of(ac)] =
        std::make_unique<TxQueue>(channel, id_, ac, static_cast<TxQueueOwner*>(this), queue_capacity);
  }
  ap_.attach_station(id_, this);
}

LoadNode::~LoadNode() = default;

void LoadNode::send_uplink(Packet p) {
  const PacketId id = p.id;
  if (!queues_[index_of(p.ac)]->push(std::move(p))) release(id);
}

std::uint64_t LoadNode::tail_drops() const {
  std::uint64_t n = 0;
  for (const auto& q : queues_) n += q->tail_drops();
  return n;
}

void LoadNode::on_downlink(Packet&& frame, SimTime /*start*/, SimTime /*end*/) {
  ++stats_.downlink_received;
  release(frame.id);
}

void LoadNode::on_downlink_lost(const Packet& frame, SimTime /*now*/) {
  ++stats_.downlink_lost;
  release(frame.id);
}

void LoadNode::on_sent(Packet&& frame, SimTime /*start*/, SimTime end) {
  ++stats_.uplink_sent;
  const PacketId id = frame.id;
  ap_.receive_uplink(std::move(frame), end);
  release(id);
}

void LoadNode::on_lost(Packet&& frame, SimTime /*now*/) {
  ++stats_.uplink_lost;
  release(frame.id);
}

TrafficDriver::TrafficDriver(Simulator& sim, AccessPoint& ap, std::vector<LoadNode*> nodes, TrafficGenerator& gen,
                             int flows_per_node, SimTime horizon, int window)
    : sim_(sim),
      ap_(ap),
      nodes_(std::move(nodes)),
      gen_(gen),
      flows_per_node_(flows_per_node),
      horizon_(horizon),
      window_(window) {
  if (flows_per_node_ <= 0 && !nodes_.empty()) throw std::invalid_argument("flows per node must be positive");
  if (window_ < 0) throw std::invalid_argument("window must be >= 0");
  for (LoadNode* n : nodes_) n->set_release_handler([this](PacketId id) { released(id); });
}

void TrafficDriver::start() { schedule_next(); }

void TrafficDriver::schedule_next() {
  if (nodes_.empty()) return;
  const auto rec = gen_.next(horizon_);
  if (!rec) return;
  const SimTime at = std::max(rec->timestamp_us, sim_.now());
  sim_.schedule_at(at, "traffic.packet", [this, r = *rec] {
    offer(r);
    schedule_next();
  });
}

void TrafficDriver::offer(const TraceRecord& r) {
  if (windowed(r)) {
    FlowState& f = flows_[r.flow];
    if (f.in_network >= window_) {
      f.waiting.push_back(r);
      ++held_total_;
      return;
    }
  }
  inject(r);
}

void TrafficDriver::inject(TraceRecord r, bool reserved) {
  r.timestamp_us = sim_.now();
  if (on_record_) on_record_(r);
  LoadNode* node = nodes_[static_cast<std::size_t>(r.flow / flows_per_node_) % nodes_.size()];
  Packet p;
  p.id = injected_++;
  p.size_bytes = r.size_bytes;
  p.ac = r.ac;
  p.direction = r.direction;
  p.kind = PacketKind::data;
  if (windowed(r)) {
    if (!reserved) ++flows_[r.flow].in_network;
    owner_.emplace(p.id, r.flow);
  }
  if (r.direction == Direction::uplink) {
    p.src = node->id();
    p.dst = kWiredNode;
    node->send_uplink(std::move(p));
  } else {
    p.src = kWiredNode;
    p.dst = node->id();
    ap_.enqueue_downlink(std::move(p));
  }
}

void TrafficDriver::released(PacketId id) {
  auto it = owner_.find(id);
  if (it == owner_.end()) return;
  FlowState& f = flows_[it->second];
  owner_.erase(it);
  --f.in_network;
  if (!f.waiting.empty()) {
    TraceRecord next = f.waiting.front();
    f.waiting.pop_front();
    // The slot stays taken; injection leaves the current call chain, which
    // may run inside the AP.
    ++f.in_network;
    sim_.schedule_in(0, "traffic.window", [this, next] { inject(next, true); });
  }
}

}  // namespace eaps
