#include "dagrun/sim_clock.hpp"

#include <chrono>
#include <cmath>

namespace dagrun {

thread_local SimClock::ActorRec* SimClock::tl_self_ = nullptr;

SimClock::SimClock(ClockMode mode) : mode_(mode) {
  wall_start_ = std::chrono::steady_clock::now();
}

SimClock::~SimClock() {
  // run() drains everything; a clock destroyed mid-run is a programming
  // error we cannot recover from, so just make sure threads are joined.
  std::unique_lock<std::mutex> lk(mu_);
  reap_exited_locked();
  lk.unlock();
  for (auto& t : graveyard_)
    if (t.joinable()) t.join();
}

int64_t SimClock::now_ns() {
  if (mode_ == ClockMode::Wall) {
    auto d = std::chrono::steady_clock::now() - wall_start_;
    return std::chrono::duration_cast<std::chrono::nanoseconds>(d).count();
  }
  std::lock_guard<std::mutex> lk(mu_);
  return now_ns_;
}

bool SimClock::in_actor() const { return tl_self_ != nullptr; }

uint64_t SimClock::self_id() {
  if (!tl_self_) throw Error("self_id outside actor context");
  return tl_self_->id;
}

const std::string& SimClock::self_name() {
  if (!tl_self_) throw Error("self_name outside actor context");
  return tl_self_->name;
}

void SimClock::spawn(std::string name, std::function<void()> body) {
  std::unique_lock<std::mutex> lk(mu_);
  auto rec = std::make_unique<ActorRec>();
  ActorRec* raw = rec.get();
  raw->id = next_actor_id_++;
  raw->name = std::move(name);
  ++live_;
  actors_.emplace(raw->id, std::move(rec));
  if (mode_ == ClockMode::Virtual)
    wakeups_.push({now_ns_, next_seq_++, raw->id});
  else
    raw->runnable = true;
  raw->thread = std::thread([this, raw, b = std::move(body)]() mutable { actor_main(raw, std::move(b)); });
}

void SimClock::actor_main(ActorRec* rec, std::function<void()> body) {
  tl_self_ = rec;
  bool start = true;
  if (mode_ == ClockMode::Virtual) {
    std::unique_lock<std::mutex> lk(mu_);
    rec->cv.wait(lk, [&] { return rec->runnable || stalled_; });
    start = rec->runnable;  // teardown can cancel actors that never ran
  }
  if (start) {
    try {
      body();
    } catch (const SimStalled&) {
      // expected during teardown
    } catch (...) {
      std::lock_guard<std::mutex> lk(mu_);
      if (!first_error_) first_error_ = std::current_exception();
      initiate_stall_locked();
    }
  }
  std::lock_guard<std::mutex> lk(mu_);
  rec->exited = true;
  rec->runnable = false;
  --live_;
  exited_ids_.push_back(rec->id);
  tl_self_ = nullptr;
  if (mode_ == ClockMode::Virtual && current_ == rec) {
    current_ = nullptr;
    coord_cv_.notify_one();
  } else {
    coord_cv_.notify_one();  // wall: run() waits on live_ == 0
  }
}

void SimClock::yield_and_wait(std::unique_lock<std::mutex>& lk, ActorRec* rec) {
  rec->runnable = false;
  if (current_ == rec) {
    current_ = nullptr;
    coord_cv_.notify_one();
  }
  rec->cv.wait(lk, [&] { return rec->runnable || stalled_; });
  if (!rec->runnable && stalled_) throw SimStalled("simulation torn down");
}

void SimClock::sleep_ns(int64_t delta_ns) {
  if (delta_ns < 0) delta_ns = 0;
  if (mode_ == ClockMode::Wall) {
    std::this_thread::sleep_for(std::chrono::nanoseconds(delta_ns));
    return;
  }
  if (!tl_self_) throw Error("sleep_ns outside actor context");
  std::unique_lock<std::mutex> lk(mu_);
  if (stalled_) throw SimStalled("simulation torn down");
  wakeups_.push({now_ns_ + delta_ns, next_seq_++, tl_self_->id});
  yield_and_wait(lk, tl_self_);
}

void SimClock::sleep_ms(double ms) { sleep_ns(static_cast<int64_t>(std::llround(ms * 1e6))); }

void SimClock::park() {
  if (!tl_self_) throw Error("park outside actor context");
  std::unique_lock<std::mutex> lk(mu_);
  if (stalled_) throw SimStalled("simulation torn down");
  if (tl_self_->permit) {
    tl_self_->permit = false;
    return;
  }
  tl_self_->parked = true;
  if (mode_ == ClockMode::Wall) {
    tl_self_->cv.wait(lk, [&] { return tl_self_->permit || stalled_; });
    if (!tl_self_->permit && stalled_) throw SimStalled("simulation torn down");
    tl_self_->permit = false;
    tl_self_->parked = false;
    return;
  }
  yield_and_wait(lk, tl_self_);
  tl_self_->permit = false;
}

void SimClock::unpark(uint64_t actor_id) {
  std::lock_guard<std::mutex> lk(mu_);
  auto it = actors_.find(actor_id);
  if (it == actors_.end()) return;
  ActorRec* rec = it->second.get();
  if (rec->exited) return;
  rec->permit = true;
  if (!rec->parked) return;
  rec->parked = false;
  if (mode_ == ClockMode::Virtual)
    wakeups_.push({now_ns_, next_seq_++, rec->id});
  else
    rec->cv.notify_all();
}

void SimClock::initiate_stall_locked() {
  if (stalled_) return;
  stalled_ = true;
  for (auto& [id, rec] : actors_)
    if (!rec->exited) rec->cv.notify_all();
}

void SimClock::reap_exited_locked() {
  for (uint64_t id : exited_ids_) {
    auto it = actors_.find(id);
    if (it == actors_.end()) continue;
    graveyard_.push_back(std::move(it->second->thread));
    actors_.erase(it);
  }
  exited_ids_.clear();
  // Joining under the lock is safe: a thread lands in exited_ids_ at the
  // very end of actor_main and never retakes the lock afterwards.
  for (auto& t : graveyard_)
    if (t.joinable()) t.join();
  graveyard_.clear();
}

void SimClock::run(const std::string& root_name, std::function<void()> root) {
  {
    std::lock_guard<std::mutex> lk(mu_);
    if (running_) throw Error("SimClock::run is not reentrant");
    running_ = true;
  }
  spawn(root_name, std::move(root));

  std::unique_lock<std::mutex> lk(mu_);
  if (mode_ == ClockMode::Wall) {
    coord_cv_.wait(lk, [&] { return live_ == 0; });
    reap_exited_locked();
    running_ = false;
    if (first_error_) std::rethrow_exception(first_error_);
    return;
  }

  bool deadlock = false;
  while (live_ > 0 && !stalled_) {
    if (wakeups_.empty()) {
      // Every live actor is parked with no pending wakeup: nobody can ever
      // make progress again.
      deadlock = true;
      initiate_stall_locked();
      break;
    }
    Wakeup w = wakeups_.top();
    wakeups_.pop();
    auto it = actors_.find(w.actor);
    if (it == actors_.end() || it->second->exited) continue;
    ActorRec* rec = it->second.get();
    if (w.t_ns > now_ns_) now_ns_ = w.t_ns;
    current_ = rec;
    rec->runnable = true;
    rec->cv.notify_one();
    coord_cv_.wait(lk, [&] { return current_ == nullptr; });
    if (exited_ids_.size() > 64) reap_exited_locked();
  }
  // Teardown (error or deadlock): wake the stragglers and drain.
  initiate_stall_locked();
  coord_cv_.wait(lk, [&] { return live_ == 0; });
  reap_exited_locked();
  running_ = false;
  stalled_ = false;
  if (first_error_) {
    auto err = first_error_;
    first_error_ = nullptr;
    std::rethrow_exception(err);
  }
  if (deadlock)
    throw SimStalled("deadlock: all actors parked with no pending wakeups");
}

}  // namespace dagrun
