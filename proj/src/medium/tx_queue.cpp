#include "eaps/medium/tx_queue.hpp"

namespace eaps {

TxQueue::TxQueue(Channel& channel, NodeId device, AccessCategory ac, TxQueueOwner* owner, std::size_t capacity)
    : channel_(channel), id_(channel.add_contender(device, ac, this)), owner_(owner), capacity_(capacity) {}

bool TxQueue::push(Packet p) {
  if (q_.size() >= capacity_) {
    ++tail_drops_;
    return false;
  }
  q_.push_back(std::move(p));
  channel_.notify(id_);
  return true;
}

Packet TxQueue::take_head() {
  Packet p = std::move(q_.front());
  q_.pop_front();
  return p;
}

}  // namespace eaps
