#pragma once

#include <map>
#include <string>
#include <vector>

#include "dagrun/engines.hpp"
#include "dagrun/event_log.hpp"
#include "dagrun/task_graph.hpp"

namespace dagrun {

// Span of the event log: max event time minus min event time.
double log_makespan_ms(const EventLog& log);

// Short deterministic fingerprint of a value: the JSON form when it is
// small, a hash of it when it is not. Equal values always digest equally.
std::string value_digest(const Value& v);

struct TaskPhases {
  double read_ms = 0;
  double compute_ms = 0;
  double write_ms = 0;
  double invoke_delay_ms = 0;
};

// Everything one run produces, reduced to numbers. Counters come from the
// engine's own bookkeeping; tests reconcile them against the raw event log.
struct RunReport {
  std::string engine;
  std::string run_id;
  bool ok = false;
  std::string error;
  double makespan_ms = 0;
  size_t tasks = 0;
  size_t executors_invoked = 0;
  size_t cold_starts = 0;
  size_t retries = 0;
  size_t timeouts = 0;
  size_t proxy_invocations = 0;
  size_t max_distinct_fanin_winners = 0;
  KvStats kv;
  std::map<TaskId, TaskPhases> per_task;  // first completion per task
  std::map<TaskId, std::string> sinks;    // task -> value digest
  nlohmann::json config;

  nlohmann::json to_json() const;
};

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunReport build_report(const RunConfig& cfg, const TaskGraph& g, const EventLog& log,
                       const RunOutcome& out);

struct TrendCell {
  std::string engine;
  double delay_ms = 0;
  std::vector<double> makespans_ms;  // one per repeat
  double min_ms = 0;
  double mean_ms = 0;
  double max_ms = 0;
};

// Engine x delay sweep over tree reduction, each cell aggregated over
// `repeats` seeded runs. ordering_ok reports whether mean makespans at every
// delay kept the expected engine order (decentralized fastest, serialized
// strawman slowest).
struct TrendReport {
  int64_t size = 0;
  int repeats = 0;
  std::vector<std::string> engines;
  std::vector<double> delays_ms;
  std::vector<TrendCell> cells;
  bool ordering_ok = true;
  std::vector<std::string> ordering_violations;

  nlohmann::json to_json() const;
};

TrendReport run_trend(const std::vector<EngineKind>& engines, const std::vector<double>& delays_ms,
                      int repeats, int64_t size, const RunConfig& base, const OpRegistry& reg);

// Sorted (value_ms, cumulative fraction) pairs per phase, computed from a
// run report's per_task table. Input and output are report JSON documents.
nlohmann::json phase_cdfs(const nlohmann::json& run_report);

}  // namespace dagrun
