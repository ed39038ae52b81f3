#pragma once

#include <deque>
#include <mutex>
#include <optional>
#include <utility>

#include "dagrun/sim_clock.hpp"

namespace dagrun {

// Unbounded MPMC queue for actor-to-actor handoff. send never blocks; recv
// parks the caller until an item or close() arrives. After close, recv
// drains whatever is queued and then returns nullopt; send on a closed
// channel silently drops (late completions racing run teardown).
template <typename T>
class Channel {
 public:
  explicit Channel(SimClock& clock) : clock_(clock) {}

  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  void send(T v) {
    std::optional<uint64_t> waiter;
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (closed_) return;
      items_.push_back(std::move(v));
      if (!waiters_.empty()) {
        waiter = waiters_.front();
        waiters_.pop_front();
      }
    }
    if (waiter) clock_.unpark(*waiter);
  }

  std::optional<T> recv() {
    for (;;) {
      {
        std::lock_guard<std::mutex> lk(mu_);
        if (!items_.empty()) {
          T v = std::move(items_.front());
          items_.pop_front();
          return v;
        }
        if (closed_) return std::nullopt;
        waiters_.push_back(clock_.self_id());
      }
      clock_.park();
      // Another consumer may have taken the item that woke us; loop.
    }
  }

  std::optional<T> try_recv() {
    std::lock_guard<std::mutex> lk(mu_);
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  void close() {
    std::deque<uint64_t> wake;
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (closed_) return;
      closed_ = true;
      wake.swap(waiters_);
    }
    for (uint64_t id : wake) clock_.unpark(id);
  }

  bool closed() const {
    std::lock_guard<std::mutex> lk(mu_);
    return closed_;
  }

  size_t size() const {
    std::lock_guard<std::mutex> lk(mu_);
    return items_.size();
  }

 private:
  SimClock& clock_;
  mutable std::mutex mu_;
  std::deque<T> items_;
  std::deque<uint64_t> waiters_;
  bool closed_ = false;
};

}  // namespace dagrun
