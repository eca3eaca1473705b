#pragma once

#include <deque>
#include <functional>

#include "svs/transport/frame.hpp"

namespace svs::transport {

// Bounded-retry sender. On exhaustion the message is either spilled to a
// local queue for replay after reconnect (records) or dead-lettered
// (alerts, where stale delivery has no value).
class RetrySender {
 public:
  enum class OnFailure { spill, dead_letter };

  RetrySender(std::function<bool(const Message&)> send_fn,
              std::function<void(double)> sleep_fn, OnFailure mode,
              int attempts = 3, double backoff_s = 0.2)
      : send_fn_(std::move(send_fn)),
        sleep_fn_(std::move(sleep_fn)),
        mode_(mode),
        attempts_(attempts),
        backoff_s_(backoff_s) {}

  // True when delivered (possibly after retries).
  bool send(const Message& msg) {
    for (int i = 0; i < attempts_; ++i) {
      if (send_fn_(msg)) return true;
      if (i + 1 < attempts_) sleep_fn_(backoff_s_);
    }
    if (mode_ == OnFailure::spill)
      spill_.push_back(msg);
    else
      ++dead_lettered_;
    return false;
  }

  // FIFO replay of spilled messages; stops at the first failure.
  size_t replay() {
    size_t replayed = 0;
    while (!spill_.empty()) {
      if (!send_fn_(spill_.front())) break;
      spill_.pop_front();
      ++replayed;
    }
    return replayed;
  }

  size_t spilled() const { return spill_.size(); }
  long dead_lettered() const { return dead_lettered_; }

 private:
  std::function<bool(const Message&)> send_fn_;
  std::function<void(double)> sleep_fn_;
  OnFailure mode_;
  int attempts_;
  double backoff_s_;
  std::deque<Message> spill_;
  long dead_lettered_ = 0;
};

}  // namespace svs::transport
