#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dagrun {

// Base for all domain errors so callers can catch dagrun failures wholesale.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// ---- graph construction / loading ----

struct DuplicateId : Error {
  explicit DuplicateId(const std::string& id) : Error("duplicate task id: " + id) {}
};

struct UnknownDependency : Error {
  UnknownDependency(const std::string& task, const std::string& dep)
      : Error("task " + task + " depends on unknown task " + dep) {}
};

struct CycleDetected : Error {
  explicit CycleDetected(std::vector<std::string> cycle_path);
  std::vector<std::string> cycle;  // tasks on the cycle, starting at the lexicographically smallest
};

struct ParseError : Error {
  ParseError(const std::string& reason, size_t byte_offset)
      : Error("parse error at byte " + std::to_string(byte_offset) + ": " + reason),
        offset(byte_offset) {}
  size_t offset;
};

struct SchemaViolation : Error {
  explicit SchemaViolation(const std::string& what) : Error("schema violation: " + what) {}
};

// ---- ops / evaluation ----

struct OpFailure : Error {
  OpFailure(const std::string& task, const std::string& reason)
      : Error("op failed at task " + task + ": " + reason), task_id(task) {}
  std::string task_id;
};

struct DuplicateName : Error {
  explicit DuplicateName(const std::string& name) : Error("custom op already registered: " + name) {}
};

// ---- workloads ----

struct NotPowerOfTwo : Error {
  explicit NotPowerOfTwo(long long n)
      : Error("tree reduction width must be a power of two >= 2, got " + std::to_string(n)) {}
};

struct IndivisibleBlock : Error {
  IndivisibleBlock(long long n, long long block)
      : Error("block size " + std::to_string(block) + " does not divide matrix size " +
              std::to_string(n)) {}
};

// ---- kv store / coordination ----

struct UnknownFanIn : Error {
  explicit UnknownFanIn(const std::string& id) : Error("unknown fan-in: " + id) {}
};

struct UnknownFanOut : Error {
  explicit UnknownFanOut(const std::string& id) : Error("unknown fan-out: " + id) {}
};

struct IllegalEdge : Error {
  IllegalEdge(const std::string& fanin, const std::string& upstream)
      : Error("task " + upstream + " is not an in-edge of fan-in " + fanin) {}
};

// ---- platform ----

struct PlatformRejected : Error {
  explicit PlatformRejected(const std::string& what) : Error(what) {}
};

struct ConnectivityViolation : Error {
  explicit ConnectivityViolation(const std::string& what) : Error(what) {}
};

// A request ran out of attempts (max_retries exhausted). Surfaces on the run
// handle; the run as a whole reports failure.
struct PermanentFailure : Error {
  explicit PermanentFailure(const std::string& what) : Error(what) {}
};

// Attempt-teardown controls thrown out of FunctionContext charge points and
// caught by the platform's retry loop. They never escape an instance.
struct TimeoutAbort : Error {
  explicit TimeoutAbort(const std::string& what) : Error(what) {}
};

struct InjectedFault : Error {
  explicit InjectedFault(const std::string& what) : Error(what) {}
};

// Executor-side contract breach (e.g. an input missing from the KV store at a
// point where the protocol guarantees it is present). Never retried: this is
// a bug in the engine, not a simulated fault, so it aborts the simulation.
struct ProtocolViolation : Error {
  explicit ProtocolViolation(const std::string& what) : Error(what) {}
};

}  // namespace dagrun
