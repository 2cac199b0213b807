#pragma once

#include <cstddef>
#include <deque>

#include "eaps/medium/channel.hpp"

namespace eaps {

/// Receives the outcome of frames sent from a TxQueue.
class TxQueueOwner {
 public:
  virtual ~TxQueueOwner() = default;
  virtual void on_tx(const Packet& /*frame*/, SimTime /*start*/, SimTime /*end*/) {}
  virtual void on_sent(Packet&& frame, SimTime start, SimTime end) = 0;
  virtual void on_lost(Packet&& frame, SimTime now) = 0;
};

/// FIFO driver queue of one (device, AC) pair with tail drop.
class TxQueue : public FrameSource {
 public:
  TxQueue(Channel& channel, NodeId device, AccessCategory ac, TxQueueOwner* owner, std::size_t capacity = 1000);

  /// Returns false (and drops the frame) when the queue is full.
  bool push(Packet p);
  std::size_t size() const { return q_.size(); }
  std::uint64_t tail_drops() const { return tail_drops_; }

  Packet* head() override { return q_.empty() ? nullptr : &q_.front(); }
  Packet take_head() override;
  void on_tx_start(const Packet& frame, SimTime start, SimTime end) override { owner_->on_tx(frame, start, end); }
  void on_delivered(Packet&& frame, SimTime start, SimTime end) override {
    owner_->on_sent(std::move(frame), start, end);
  }
  void on_dropped(Packet&& frame, SimTime now) override { owner_->on_lost(std::move(frame), now); }

 private:
  Channel& channel_;
  ContenderId id_;
  TxQueueOwner* owner_;
  std::size_t capacity_;
  std::deque<Packet> q_;
  std::uint64_t tail_drops_ = 0;
};

}  // namespace eaps
