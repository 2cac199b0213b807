#include "eaps/core/simulator.hpp"

#include <string>

namespace eaps {

EventId Simulator::schedule_at(SimTime when, const char* tag, Action action) {
  if (when < now_) {
    throw SchedulingError("event '" + std::string(tag) + "' scheduled at " + std::to_string(when) +
                          "us, before the current clock " + std::to_string(now_) + "us");
  }
  const EventId seq = next_seq_++;
  done_.push_back(false);
  queue_.push(Event{when, seq, tag, std::move(action)});
  return seq;
}

void Simulator::cancel(EventId id) {
  if (id < done_.size() && !done_[id]) {
    done_[id] = true;
    ++cancelled_pending_;
  }
}

void Simulator::dispatch(Event& ev) {
  now_ = ev.time;
  done_[ev.seq] = true;
  ++dispatched_;
  if (trace_ != nullptr) *trace_ << ev.time << ',' << ev.seq << ',' << ev.tag << '\n';
  ev.action();
}

bool Simulator::step() {
  while (!queue_.empty()) {
    // priority_queue::top is const; the action is moved out before pop.
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    if (done_[ev.seq]) {
      --cancelled_pending_;
      continue;
    }
    dispatch(ev);
    return true;
  }
  return false;
}

std::size_t Simulator::run_until(SimTime end) {
  std::size_t count = 0;
  while (!queue_.empty() && queue_.top().time <= end) {
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    if (done_[ev.seq]) {
      --cancelled_pending_;
      continue;
    }
    dispatch(ev);
    ++count;
  }
  if (end > now_) now_ = end;
  return count;
}

}  // namespace eaps
