#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "dagrun/event_log.hpp"
#include "dagrun/meter.hpp"
#include "dagrun/task_graph.hpp"

namespace dagrun {

struct PlatformConfig {
  double invoke_overhead_ms = 50.0;
  double cold_start_ms = 200.0;
  int warm_pool_size = 64;
  double timeout_ms = 120000.0;
  int max_retries = 2;
  int max_concurrency = 0;  // 0 = unbounded
  double fail_rate = 0.0;   // per-attempt injected crash probability
  bool instance_reuse = true;
  uint64_t fault_seed = 0;
};

// A value handed to an invocation by copy instead of by KV key. in_kv marks
// values the sender also wrote to the store, so the receiver never rewrites
// them.
struct InputBinding {
  TaskId task;
  ValuePtr value;
  bool in_kv = false;
};

struct InvocationRequest {
  std::string request_id;
  std::string run_id;
  TaskId schedule_leaf;                    // which static schedule to walk (decentralized engine)
  std::string entry_key;                   // op key to start at; empty = schedule entry
  TaskId arrived_from;                     // producing task of the edge this executor rides
  TaskId task;                             // single task to run (centralized engines)
  std::vector<InputBinding> inline_inputs;
  int attempt = 0;                         // managed by the platform
  int64_t invoked_at_ns = 0;               // stamped at invoke; feeds invoke-delay metrics
};

enum class CommAction { KvOp, Publish, Invoke, InboundListen, DirectReceive };

// The meter a function body charges against. Every charge advances the
// clock, checks the attempt deadline (sleeps up to it, then aborts) and is a
// fault-injection checkpoint: a doomed attempt dies at a predrawn charge
// index, or at completion if the body has fewer charges than that.
class FunctionContext : public LatencyMeter {
 public:
  FunctionContext(SimClock& clock, EventLog& log, std::string instance,
                  const InvocationRequest& req, int64_t deadline_ns, bool doomed, int crash_at);

  void charge_ns(int64_t ns, Phase p) override;
  const std::string& instance() const override { return instance_; }
  const std::string& request_id() const override { return request_id_; }

  int64_t now_ns() { return clock_.now_ns(); }
  SimClock& clock() { return clock_; }
  EventLog& log() { return log_; }
  int attempt() const { return attempt_; }
  int64_t invoked_at_ns() const { return invoked_at_ns_; }

  double phase_ms(Phase p) const { return static_cast<double>(phase_ns_[idx(p)]) / 1e6; }

  // Called by the platform after the handler returns; a doomed attempt that
  // never reached its crash checkpoint dies here, after the work but before
  // success is recorded. Exercises replay of already-applied effects.
  void completion_checkpoint();

 private:
  static size_t idx(Phase p) { return static_cast<size_t>(p); }

  SimClock& clock_;
  EventLog& log_;
  std::string instance_;
  std::string request_id_;
  int attempt_;
  int64_t invoked_at_ns_;
  int64_t deadline_ns_;
  bool doomed_;
  int crash_at_;
  int charges_ = 0;
  int64_t phase_ns_[4] = {0, 0, 0, 0};
};

// Simulated FaaS control plane. invoke() charges the caller the dispatch
// overhead and schedules an instance actor; the retry loop (attempt, crash,
// re-invoke up to max_retries) lives inside that actor. Failed attempts do
// not return their instance to the warm pool; successful ones do when
// instance_reuse is on.
class Platform {
 public:
  using Handler = std::function<void(FunctionContext&, const InvocationRequest&)>;
  using ErrorSink = std::function<void(const InvocationRequest&, const std::string& reason)>;

  Platform(SimClock& clock, EventLog& log, PlatformConfig cfg);

  void set_handler(Handler h) { handler_ = std::move(h); }
  // Receives requests that exhausted all attempts. Without a sink the
  // instance actor throws PermanentFailure, tearing down the run.
  void set_error_sink(ErrorSink s) { error_sink_ = std::move(s); }

  void warm_up(int n);

  // Fire-and-forget. Throws PlatformRejected at the concurrency cap.
  void invoke(InvocationRequest req, LatencyMeter& caller);

  // Outbound-only networking guard: KV traffic, publish and invoke are
  // legal from inside a function; anything that would accept an inbound
  // connection is not.
  static bool connectivity_allowed(CommAction a);
  void enforce_connectivity(const std::string& instance, CommAction a) const;

  const PlatformConfig& config() const { return cfg_; }
  int running() const;
  size_t instances_started() const;
  size_t cold_start_count() const;
  int warm_available() const;

 private:
  void instance_main(InvocationRequest req);
  bool take_warm();
  void fault_plan(const std::string& request_id, int attempt, bool& doomed, int& crash_at) const;

  SimClock& clock_;
  EventLog& log_;
  PlatformConfig cfg_;
  Handler handler_;
  ErrorSink error_sink_;

  mutable std::mutex mu_;
  int warm_ = 0;
  int running_ = 0;
  size_t next_instance_ = 1;
  size_t cold_starts_ = 0;
};

}  // namespace dagrun
