#pragma once

#include <string>

#include "dagrun/kv_store.hpp"
#include "dagrun/platform.hpp"
#include "dagrun/schedule.hpp"
#include "dagrun/storage_manager.hpp"
#include "dagrun/task_graph.hpp"

namespace dagrun {

// Everything an executor needs to walk a schedule. Owned by the engine for
// the duration of a run; instances reference it through the platform handler.
struct RunContext {
  SimClock& clock;
  EventLog& log;
  KvStore& kv;
  Platform& platform;
  StorageManager& sm;
  const TaskGraph& graph;
  const OpRegistry& registry;
  const ScheduleSet& schedules;
  std::string run_id;
  int max_task_fanout = 10;
  size_t inline_threshold = 1024;
};

// Why a walk stopped. Surfaced for tests; the run itself only cares that the
// instance returned.
enum class WalkEnd { PathComplete, LostFanin, DelegatedFanout };

// Executes one invocation: starts at the request's entry op and follows the
// schedule until the path ends. Grows down task chains, keeps one edge of a
// narrow fan-out (handing the rest to the storage manager pool), delegates
// wide fan-outs to the proxy outright, and at fan-ins writes its edge value
// before registering so the last arriver always finds every input.
WalkEnd run_executor(const RunContext& rc, FunctionContext& ctx, const InvocationRequest& req);

}  // namespace dagrun
