#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "dagrun/sim_clock.hpp"

namespace dagrun {

// Latency buckets for the per-task breakdown. Other covers charges that are
// nobody's task phase (dispatch overhead, scheduler processing).
enum class Phase { Read, Compute, Write, Other };

// Anything that can absorb simulated latency on behalf of a caller. The KV
// store, the platform and the storage manager charge through this interface
// so the same code path serves both plain actors (schedulers, invoker
// workers) and function instances, where a charge is also a timeout check
// and a fault-injection checkpoint.
class LatencyMeter {
 public:
  virtual ~LatencyMeter() = default;

  virtual void charge_ns(int64_t ns, Phase p) = 0;
  virtual const std::string& instance() const = 0;
  virtual const std::string& request_id() const = 0;

  void charge_ms(double ms, Phase p) {
    charge_ns(static_cast<int64_t>(std::llround(ms * 1e6)), p);
  }
};

// Meter for infrastructure actors: charges are plain clock sleeps, no
// timeout, no fault injection, no phase accounting.
class ActorMeter : public LatencyMeter {
 public:
  ActorMeter(SimClock& clock, std::string instance)
      : clock_(clock), instance_(std::move(instance)) {}

  void charge_ns(int64_t ns, Phase) override { clock_.sleep_ns(ns); }
  const std::string& instance() const override { return instance_; }
  const std::string& request_id() const override { return no_request_; }

 private:
  SimClock& clock_;
  std::string instance_;
  std::string no_request_;
};

}  // namespace dagrun
