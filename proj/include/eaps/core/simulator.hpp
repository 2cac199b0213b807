#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <vector>

#include "eaps/core/sim_time.hpp"

namespace eaps {

class SchedulingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

using EventId = std::uint64_t;

/// Discrete-event engine: a monotonic microsecond clock plus an event queue
/// ordered by (fire_time, sequence). Equal-time events run in the order they
/// were scheduled.
class Simulator {
 public:
  using Action = std::function<void()>;

  SimTime now() const { return now_; }

  /// `tag` must point at storage that outlives the simulator (a string
  /// literal); it is only used for the trace log.
  EventId schedule_at(SimTime when, const char* tag, Action action);
  EventId schedule_in(Duration delay, const char* tag, Action action) {
    return schedule_at(now_ + delay, tag, std::move(action));
  }

  /// A cancelled event is neither dispatched, traced, nor counted.
  void cancel(EventId id);

  /// Dispatches every event with fire_time <= end, then advances the clock
  /// to `end`. Returns the number of dispatched events.
  std::size_t run_until(SimTime end);

  /// Dispatches the next pending event. Returns false when the queue is empty.
  bool step();

  bool empty() const { return queue_.size() == cancelled_pending_; }
  std::size_t dispatched() const { return dispatched_; }

  /// One `time_us,sequence,action` line per dispatch; pass nullptr to disable.
  void set_trace(std::ostream* out) { trace_ = out; }

 private:
  struct Event {
    SimTime time;
    EventId seq;
    const char* tag;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  void dispatch(Event& ev);

  SimTime now_ = 0;
  EventId next_seq_ = 0;
  std::size_t dispatched_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  // done_[seq] is set once an event is dispatched or cancelled.
  std::vector<bool> done_;
  std::size_t cancelled_pending_ = 0;
  std::ostream* trace_ = nullptr;
};

}  // namespace eaps
