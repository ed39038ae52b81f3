#include "dagrun/platform.hpp"

#include <cmath>

#include "dagrun/errors.hpp"
#include "dagrun/hash.hpp"

namespace dagrun {

FunctionContext::FunctionContext(SimClock& clock, EventLog& log, std::string instance,
                                 const InvocationRequest& req, int64_t deadline_ns, bool doomed,
                                 int crash_at)
    : clock_(clock),
      log_(log),
      instance_(std::move(instance)),
      request_id_(req.request_id),
      attempt_(req.attempt),
      invoked_at_ns_(req.invoked_at_ns),
      deadline_ns_(deadline_ns),
      doomed_(doomed),
      crash_at_(crash_at) {}

void FunctionContext::charge_ns(int64_t ns, Phase p) {
  if (ns < 0) ns = 0;
  int64_t now = clock_.now_ns();
  if (now + ns > deadline_ns_) {
    // The instance is killed at the deadline, partway through this charge.
    if (deadline_ns_ > now) clock_.sleep_ns(deadline_ns_ - now);
    throw TimeoutAbort("attempt exceeded timeout");
  }
  clock_.sleep_ns(ns);
  phase_ns_[idx(p)] += ns;
  charges_++;
  if (doomed_ && charges_ > crash_at_) throw InjectedFault("injected crash");
}

void FunctionContext::completion_checkpoint() {
  if (doomed_) throw InjectedFault("injected crash at completion");
}

Platform::Platform(SimClock& clock, EventLog& log, PlatformConfig cfg)
    : clock_(clock), log_(log), cfg_(cfg), warm_(cfg.warm_pool_size) {}

void Platform::warm_up(int n) {
  std::lock_guard<std::mutex> lk(mu_);
  warm_ = n;
}

bool Platform::take_warm() {
  std::lock_guard<std::mutex> lk(mu_);
  if (warm_ > 0) {
    --warm_;
    return true;
  }
  ++cold_starts_;
  return false;
}

void Platform::fault_plan(const std::string& request_id, int attempt, bool& doomed,
                          int& crash_at) const {
  doomed = false;
  crash_at = 0;
  if (cfg_.fail_rate <= 0.0) return;
  uint64_t s = splitmix64(cfg_.fault_seed ^ fnv1a64(request_id) ^
                          (0x9e3779b97f4a7c15ull * static_cast<uint64_t>(attempt + 1)));
  double u = static_cast<double>(s >> 11) * 0x1.0p-53;
  doomed = u < cfg_.fail_rate;
  crash_at = static_cast<int>(splitmix64(s) % 12);
}

bool Platform::connectivity_allowed(CommAction a) {
  switch (a) {
    case CommAction::KvOp:
    case CommAction::Publish:
    case CommAction::Invoke:
      return true;
    case CommAction::InboundListen:
    case CommAction::DirectReceive:
      return false;
  }
  return false;
}

void Platform::enforce_connectivity(const std::string& instance, CommAction a) const {
  if (connectivity_allowed(a)) return;
  const char* what = a == CommAction::InboundListen ? "inbound listener" : "direct receive";
  throw ConnectivityViolation("function " + instance + " attempted an " + what +
                              "; only outbound connections are allowed");
}

void Platform::invoke(InvocationRequest req, LatencyMeter& caller) {
  if (!handler_) throw Error("platform handler not set");
  {
    std::lock_guard<std::mutex> lk(mu_);
    if (cfg_.max_concurrency > 0 && running_ >= cfg_.max_concurrency)
      throw PlatformRejected("invocation of " + req.request_id + " rejected: " +
                             std::to_string(running_) + " instances running at the cap");
    ++running_;
  }
  req.attempt = 0;
  req.invoked_at_ns = clock_.now_ns();
  log_.append(clock_.now_ns(), EventKind::Invoke, caller.instance(), req.request_id,
              {{"leaf", req.schedule_leaf}, {"entry", req.entry_key}, {"task", req.task}});
  try {
    caller.charge_ms(cfg_.invoke_overhead_ms, Phase::Other);
  } catch (...) {
    std::lock_guard<std::mutex> lk(mu_);
    --running_;
    throw;
  }
  clock_.spawn("fn@" + req.request_id,
               [this, r = std::move(req)]() mutable { instance_main(std::move(r)); });
}

void Platform::instance_main(InvocationRequest req) {
  struct RunningGuard {
    Platform* p;
    ~RunningGuard() {
      std::lock_guard<std::mutex> lk(p->mu_);
      --p->running_;
    }
  } guard{this};

  std::string last_reason;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    req.attempt = attempt;
    std::string instance;
    {
      std::lock_guard<std::mutex> lk(mu_);
      instance = "fn-" + std::to_string(next_instance_++);
    }
    if (!take_warm()) {
      log_.append(clock_.now_ns(), EventKind::ColdStart, instance, req.request_id,
                  {{"cold_start_ms", cfg_.cold_start_ms}});
      clock_.sleep_ms(cfg_.cold_start_ms);
    }
    bool doomed = false;
    int crash_at = 0;
    fault_plan(req.request_id, attempt, doomed, crash_at);
    int64_t deadline =
        clock_.now_ns() + static_cast<int64_t>(std::llround(cfg_.timeout_ms * 1e6));
    FunctionContext ctx(clock_, log_, instance, req, deadline, doomed, crash_at);
    try {
      handler_(ctx, req);
      ctx.completion_checkpoint();
      if (cfg_.instance_reuse) {
        std::lock_guard<std::mutex> lk(mu_);
        ++warm_;
      }
      log_.append(clock_.now_ns(), EventKind::Done, instance, req.request_id,
                  {{"attempt", attempt}});
      return;
    } catch (const TimeoutAbort&) {
      last_reason = "timeout";
      log_.append(clock_.now_ns(), EventKind::Timeout, instance, req.request_id,
                  {{"attempt", attempt}});
    } catch (const InjectedFault&) {
      last_reason = "fault";
    } catch (const OpFailure& e) {
      last_reason = e.what();
    }
    // Anything else (protocol violations, engine bugs) propagates and tears
    // the simulation down. A failed attempt's container is discarded, so
    // nothing returns to the warm pool here.
    if (attempt < cfg_.max_retries) {
      log_.append(clock_.now_ns(), EventKind::Retry, instance, req.request_id,
                  {{"attempt", attempt + 1}, {"reason", last_reason}});
      clock_.sleep_ms(cfg_.invoke_overhead_ms);
    }
  }
  std::string msg = "request " + req.request_id + " failed after " +
                    std::to_string(cfg_.max_retries + 1) + " attempts: " + last_reason;
  if (error_sink_) {
    error_sink_(req, msg);
    return;
  }
  throw PermanentFailure(msg);
}

int Platform::running() const {
  std::lock_guard<std::mutex> lk(mu_);
  return running_;
}

size_t Platform::instances_started() const {
  std::lock_guard<std::mutex> lk(mu_);
  return next_instance_ - 1;
}

size_t Platform::cold_start_count() const {
  std::lock_guard<std::mutex> lk(mu_);
  return cold_starts_;
}

int Platform::warm_available() const {
  std::lock_guard<std::mutex> lk(mu_);
  return warm_;
}

}  // namespace dagrun
