#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <queue>
#include <thread>
#include <vector>

namespace svs {

// Deterministic discrete-event scheduler on a virtual clock (seconds).
// Ties are broken by scheduling order, so a run is exactly reproducible
// regardless of host load or thread count.
class Simulator {
 public:
  using Handler = std::function<void()>;

  double now() const { return now_; }

  void at(double t, Handler fn) {
    if (t < now_) t = now_;
    queue_.push(Event{t, seq_++, std::move(fn)});
  }

  void after(double dt, Handler fn) { at(now_ + dt, std::move(fn)); }

  // scale > 0 paces execution so virtual time never runs ahead of
  // wall-time * scale (computation may lag behind freely). 0 = unpaced.
  void set_time_scale(double scale) { time_scale_ = scale; }

  bool step() {
    if (queue_.empty()) return false;
    Event ev = queue_.top();
    queue_.pop();
    pace(ev.t);
    now_ = ev.t;
    ++dispatched_;
    ev.fn();
    return true;
  }

  void run() {
    while (step()) {
    }
  }

  // Runs every event with t <= t_end, then advances the clock to t_end.
  void run_until(double t_end) {
    while (!queue_.empty() && queue_.top().t <= t_end) step();
    pace(t_end);
    if (t_end > now_) now_ = t_end;
  }

  size_t pending() const { return queue_.size(); }
  uint64_t dispatched() const { return dispatched_; }

 private:
  struct Event {
    double t;
    uint64_t seq;
    Handler fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.t != b.t) return a.t > b.t;
      return a.seq > b.seq;
    }
  };

  void pace(double t_next) {
    if (time_scale_ <= 0.0) return;
    if (!wall_started_) {
      wall_start_ = std::chrono::steady_clock::now();
      wall_started_ = true;
    }
    const auto target =
        wall_start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          std::chrono::duration<double>(t_next / time_scale_));
    if (target > std::chrono::steady_clock::now()) {
      std::this_thread::sleep_until(target);
    }
  }

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  double now_ = 0.0;
  uint64_t seq_ = 0;
  uint64_t dispatched_ = 0;
  double time_scale_ = 0.0;
  std::chrono::steady_clock::time_point wall_start_{};
  bool wall_started_ = false;
};

}  // namespace svs
