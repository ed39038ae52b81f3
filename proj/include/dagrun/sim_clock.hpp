#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include "dagrun/errors.hpp"

namespace dagrun {

enum class ClockMode { Virtual, Wall };

// Thrown inside actors when the simulation tears down underneath them
// (deadlock detected, or another actor aborted with an error).
struct SimStalled : Error {
  explicit SimStalled(const std::string& what) : Error(what) {}
};

// Actor scheduler with two modes sharing one API, so simulated processes
// (executors, schedulers, invoker workers) are written once as plain
// sequential code:
//
//  - Wall: every actor is a free-running std::thread; sleep_ns sleeps for
//    real; time is the steady clock.
//  - Virtual: actors are still threads, but exactly one is ever runnable.
//    Yield points (sleep_ns, park) hand control back to a coordinator that
//    pops the next wake-up from a (time, seq) priority queue. Execution
//    order is a pure function of the event sequence, which makes runs
//    bit-reproducible, and time advances by queue jumps instead of waiting.
//
// Blocking on anything other than the clock goes through park/unpark (see
// Channel); a parked actor holds no wake-up event, so "no events left and
// everyone parked" is a deadlock, reported as SimStalled.
class SimClock {
 public:
  explicit SimClock(ClockMode mode);
  ~SimClock();

  SimClock(const SimClock&) = delete;
  SimClock& operator=(const SimClock&) = delete;

  ClockMode mode() const { return mode_; }
  int64_t now_ns();
  double now_ms() { return static_cast<double>(now_ns()) / 1e6; }

  // Registers and (virtual: schedules / wall: starts) a new actor.
  void spawn(std::string name, std::function<void()> body);

  // Must be called from an actor. Advances that actor past `delta_ns`.
  void sleep_ns(int64_t delta_ns);
  void sleep_ms(double ms);

  // Must be called from an actor: block until some other actor grants a
  // permit via unpark. A permit granted before park() makes it return
  // immediately (no lost wakeups).
  void park();
  void unpark(uint64_t actor_id);

  uint64_t self_id();
  const std::string& self_name();
  bool in_actor() const;

  // Runs `root` plus everything it spawns to completion. Rethrows the first
  // actor error; throws SimStalled on deadlock (virtual mode only).
  void run(const std::string& root_name, std::function<void()> root);

 private:
  struct ActorRec {
    uint64_t id = 0;
    std::string name;
    std::thread thread;
    std::condition_variable cv;
    bool runnable = false;  // virtual: scheduled and allowed to run
    bool permit = false;    // park/unpark token
    bool parked = false;
    bool exited = false;
  };

  struct Wakeup {
    int64_t t_ns;
    uint64_t seq;
    uint64_t actor;
    bool operator>(const Wakeup& o) const {
      return t_ns != o.t_ns ? t_ns > o.t_ns : seq > o.seq;
    }
  };

  void actor_main(ActorRec* rec, std::function<void()> body);
  void yield_and_wait(std::unique_lock<std::mutex>& lk, ActorRec* rec);
  void initiate_stall_locked();
  void reap_exited_locked();

  static thread_local ActorRec* tl_self_;

  const ClockMode mode_;
  std::mutex mu_;
  std::condition_variable coord_cv_;
  std::map<uint64_t, std::unique_ptr<ActorRec>> actors_;
  std::vector<uint64_t> exited_ids_;
  std::vector<std::thread> graveyard_;
  std::priority_queue<Wakeup, std::vector<Wakeup>, std::greater<Wakeup>> wakeups_;
  ActorRec* current_ = nullptr;
  int64_t now_ns_ = 0;
  uint64_t next_seq_ = 0;
  uint64_t next_actor_id_ = 1;
  size_t live_ = 0;
  bool stalled_ = false;
  bool running_ = false;
  std::exception_ptr first_error_;
  std::chrono::steady_clock::time_point wall_start_;
};

}  // namespace dagrun
