#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dagrun/event_log.hpp"
#include "dagrun/kv_store.hpp"
#include "dagrun/platform.hpp"
#include "dagrun/task_graph.hpp"

namespace dagrun {

// wukong: decentralized; executors walk per-leaf static schedules and
//   coordinate through the KV store, no component sees the whole run.
// strawman: one scheduler dispatches every task and serializes completion
//   notifications arriving over per-function TCP connections.
// pubsub: strawman with notifications moved onto the KV store's pub/sub, so
//   the scheduler stops paying per-message transport costs.
// parallel_invoker: pubsub plus a pool of invoker threads that absorb the
//   per-dispatch overhead the scheduler otherwise pays serially.
enum class EngineKind { Wukong, Strawman, PubSub, ParallelInvoker };

std::string engine_name(EngineKind k);
std::optional<EngineKind> engine_from_name(const std::string& name);
const std::vector<std::string>& all_engine_names();

struct RunConfig {
  EngineKind engine = EngineKind::Wukong;
  ClockMode clock_mode = ClockMode::Virtual;
  uint64_t seed = 0;
  int num_invokers = 20;       // launch / dispatch pool width
  int max_task_fanout = 10;    // widest fan-out an executor handles itself
  size_t inline_threshold = 1024;  // bytes; larger outputs travel by key
  double tcp_notify_ms = 2.0;  // strawman per-notification transport cost, each side
  double sched_proc_ms = 50.0; // centralized per-completion processing cost
  KvConfig kv;
  PlatformConfig platform;
};

struct RunOutcome {
  bool ok = false;
  std::string error;           // set when ok is false
  std::string run_id;
  std::map<TaskId, ValuePtr> sink_values;
  KvStats kv_stats;
  size_t max_distinct_fanin_winners = 0;
  size_t proxy_invocations = 0;
};

// Executes the graph once on a fresh platform/store/clock stack. The log is
// cleared first and holds the full event stream afterwards. Exhausted
// retries and concurrency-cap rejections come back as ok=false; anything
// else (protocol violations, op failures on the final attempt path, stalled
// simulation) propagates as an exception because it means a bug, not a
// failed run.
RunOutcome execute_run(const TaskGraph& g, const OpRegistry& reg, const RunConfig& cfg,
                       EventLog& log);

}  // namespace dagrun
