#include "dagrun/report.hpp"

#include <algorithm>

#include "dagrun/errors.hpp"
#include "dagrun/hash.hpp"
#include "dagrun/workloads.hpp"

namespace dagrun {

double log_makespan_ms(const EventLog& log) {
  std::vector<Event> evs = log.snapshot();
  if (evs.empty()) return 0;
  int64_t lo = evs.front().t_ns;
  int64_t hi = evs.front().t_ns;
  for (const Event& e : evs) {
    lo = std::min(lo, e.t_ns);
    hi = std::max(hi, e.t_ns);
  }
  return static_cast<double>(hi - lo) / 1e6;
}

std::string value_digest(const Value& v) {
  std::string repr = value_to_json(v).dump();
  if (repr.size() <= 48) return repr;
  return "h:" + hex16(fnv1a64(repr)) + ":" + std::to_string(repr.size());
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  return {
      {"engine", engine_name(cfg.engine)},
      {"clock", cfg.clock_mode == ClockMode::Virtual ? "virtual" : "wall"},
      {"seed", cfg.seed},
      {"num_invokers", cfg.num_invokers},
      {"max_task_fanout", cfg.max_task_fanout},
      {"inline_threshold", cfg.inline_threshold},
      {"tcp_notify_ms", cfg.tcp_notify_ms},
      {"sched_proc_ms", cfg.sched_proc_ms},
      {"kv",
       {{"shards", cfg.kv.shards},
        {"base_latency_ms", cfg.kv.base_latency_ms},
        {"per_kib_ms", cfg.kv.per_kib_ms}}},
      {"platform",
       {{"invoke_overhead_ms", cfg.platform.invoke_overhead_ms},
        {"cold_start_ms", cfg.platform.cold_start_ms},
        {"warm_pool_size", cfg.platform.warm_pool_size},
        {"timeout_ms", cfg.platform.timeout_ms},
        {"max_retries", cfg.platform.max_retries},
        {"max_concurrency", cfg.platform.max_concurrency},
        {"fail_rate", cfg.platform.fail_rate},
        {"instance_reuse", cfg.platform.instance_reuse}}},
  };
}

RunReport build_report(const RunConfig& cfg, const TaskGraph& g, const EventLog& log,
                       const RunOutcome& out) {
  RunReport r;
  r.engine = engine_name(cfg.engine);
  r.run_id = out.run_id;
  r.ok = out.ok;
  r.error = out.error;
  r.makespan_ms = log_makespan_ms(log);
  r.tasks = g.task_count();
  r.executors_invoked = log.count(EventKind::Invoke);
  r.cold_starts = log.count(EventKind::ColdStart);
  r.retries = log.count(EventKind::Retry);
  r.timeouts = log.count(EventKind::Timeout);
  r.proxy_invocations = out.proxy_invocations;
  r.max_distinct_fanin_winners = out.max_distinct_fanin_winners;
  r.kv = out.kv_stats;
  for (const Event& e : log.snapshot()) {
    if (e.kind != EventKind::TaskEnd) continue;
    TaskId task = e.detail.at("task").get<TaskId>();
    if (r.per_task.count(task)) continue;  // replayed attempts recompute identical values
    TaskPhases p;
    p.read_ms = e.detail.at("read_ms").get<double>();
    p.compute_ms = e.detail.at("compute_ms").get<double>();
    p.write_ms = e.detail.at("write_ms").get<double>();
    p.invoke_delay_ms = e.detail.at("invoke_delay_ms").get<double>();
    r.per_task.emplace(std::move(task), p);
  }
  for (const auto& [task, v] : out.sink_values) r.sinks[task] = value_digest(*v);
  r.config = run_config_to_json(cfg);
  return r;
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json per;
  per = nlohmann::json::array();
  for (const auto& [task, p] : per_task)
    per.push_back({{"task", task},
                   {"read_ms", p.read_ms},
                   {"compute_ms", p.compute_ms},
                   {"write_ms", p.write_ms},
                   {"invoke_delay_ms", p.invoke_delay_ms}});
  return {
      {"schema", 1},
      {"kind", "run"},
      {"engine", engine},
      {"run_id", run_id},
      {"ok", ok},
      {"error", error},
      {"config", config},
      {"makespan_ms", makespan_ms},
      {"tasks", tasks},
      {"executors_invoked", executors_invoked},
      {"cold_starts", cold_starts},
      {"retries", retries},
      {"timeouts", timeouts},
      {"proxy_invocations", proxy_invocations},
      {"max_distinct_fanin_winners", max_distinct_fanin_winners},
      {"kv",
       {{"reads", kv.reads},
        {"writes", kv.writes},
        {"bytes_read", kv.bytes_read},
        {"bytes_written", kv.bytes_written},
        {"fanin_registrations", kv.fanin_registrations}}},
      {"per_task", per},
      {"sinks", sinks},
  };
}

nlohmann::json TrendReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const TrendCell& c : cells)
    cs.push_back({{"engine", c.engine},
                  {"delay_ms", c.delay_ms},
                  {"makespans_ms", c.makespans_ms},
                  {"min_ms", c.min_ms},
                  {"mean_ms", c.mean_ms},
                  {"max_ms", c.max_ms}});
  return {
      {"schema", 1},
      {"kind", "trend"},
      {"size", size},
      {"repeats", repeats},
      {"engines", engines},
      {"delays_ms", delays_ms},
      {"cells", cs},
      {"ordering_ok", ordering_ok},
      {"ordering_violations", ordering_violations},
  };
}

TrendReport run_trend(const std::vector<EngineKind>& engines, const std::vector<double>& delays_ms,
                      int repeats, int64_t size, const RunConfig& base, const OpRegistry& reg) {
  if (repeats < 1) throw Error("trend needs at least one repeat per cell");
  if (engines.empty() || delays_ms.empty()) throw Error("trend needs engines and delays");

  TrendReport tr;
  tr.size = size;
  tr.repeats = repeats;
  for (EngineKind k : engines) tr.engines.push_back(engine_name(k));
  tr.delays_ms = delays_ms;

  for (EngineKind k : engines) {
    for (double delay : delays_ms) {
      TrendCell cell;
      cell.engine = engine_name(k);
      cell.delay_ms = delay;
      for (int rep = 0; rep < repeats; ++rep) {
        TaskGraph g = tree_reduction(size, delay);
        RunConfig cfg = base;
        cfg.engine = k;
        cfg.clock_mode = ClockMode::Virtual;  // determinism over speed
        cfg.seed = base.seed ^ fnv1a64(cell.engine + "|" + std::to_string(delay) + "|" +
                                       std::to_string(rep));
        EventLog log;
        RunOutcome out = execute_run(g, reg, cfg, log);
        if (!out.ok)
          throw Error("trend cell " + cell.engine + " delay " + std::to_string(delay) +
                      " repeat " + std::to_string(rep) + " failed: " + out.error);
        cell.makespans_ms.push_back(log_makespan_ms(log));
      }
      cell.min_ms = *std::min_element(cell.makespans_ms.begin(), cell.makespans_ms.end());
      cell.max_ms = *std::max_element(cell.makespans_ms.begin(), cell.makespans_ms.end());
      double sum = 0;
      for (double m : cell.makespans_ms) sum += m;
      cell.mean_ms = sum / static_cast<double>(cell.makespans_ms.size());
      tr.cells.push_back(std::move(cell));
    }
  }

  // Expected order, fastest first. Only checkable at delays where all four
  // engines ran.
  const std::vector<std::string> order = {"wukong", "parallel-invoker", "pubsub", "strawman"};
  for (double delay : delays_ms) {
    std::map<std::string, double> mean;
    for (const TrendCell& c : tr.cells)
      if (c.delay_ms == delay) mean[c.engine] = c.mean_ms;
    bool all = true;
    for (const std::string& e : order) all = all && mean.count(e) > 0;
    if (!all) continue;
    for (size_t i = 0; i + 1 < order.size(); ++i) {
      if (mean[order[i]] <= mean[order[i + 1]]) continue;
      tr.ordering_ok = false;
      tr.ordering_violations.push_back(
          "delay " + std::to_string(delay) + ": " + order[i] + " mean " +
          std::to_string(mean[order[i]]) + " ms exceeds " + order[i + 1] + " mean " +
          std::to_string(mean[order[i + 1]]) + " ms");
    }
  }
  return tr;
}

nlohmann::json phase_cdfs(const nlohmann::json& run_report) {
  if (!run_report.contains("per_task") || !run_report.at("per_task").is_array())
    throw SchemaViolation("report has no per_task table");
  const nlohmann::json& per = run_report.at("per_task");
  const std::vector<std::string> phases = {"read_ms", "compute_ms", "write_ms",
                                           "invoke_delay_ms"};
  nlohmann::json out_phases;
  for (const std::string& ph : phases) {
    std::vector<double> vals;
    vals.reserve(per.size());
    for (const auto& row : per) vals.push_back(row.at(ph).get<double>());
    std::sort(vals.begin(), vals.end());
    nlohmann::json points = nlohmann::json::array();
    for (size_t i = 0; i < vals.size(); ++i)
      points.push_back({vals[i], static_cast<double>(i + 1) / static_cast<double>(vals.size())});
    out_phases[ph] = std::move(points);
  }
  return {
      {"schema", 1},
      {"kind", "breakdown"},
      {"engine", run_report.value("engine", std::string{})},
      {"tasks", per.size()},
      {"phases", out_phases},
  };
}

}  // namespace dagrun
