#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dagrun/engines.hpp"
#include "dagrun/errors.hpp"
#include "dagrun/report.hpp"
#include "dagrun/workloads.hpp"

namespace {

using namespace dagrun;

struct Options {
  std::string workload = "tr";
  int64_t size = 1024;
  int64_t block = 4;
  double delay_ms = 0.0;
  std::string dag_path;
  std::string emit_dag_path;
  std::string engine = "wukong";
  std::string clock = "virtual";
  std::vector<std::string> engines;
  std::vector<double> delays = {0.0, 100.0, 250.0, 500.0};
  int repeats = 10;
  std::string report_path;
  std::string in_path;
  bool no_oracle = false;
  RunConfig cfg;
};

void add_engine_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--invoke-overhead-ms", o.cfg.platform.invoke_overhead_ms,
                  "Dispatch latency charged to whoever calls invoke")
      ->capture_default_str();
  cmd->add_option("--cold-start-ms", o.cfg.platform.cold_start_ms,
                  "Extra startup latency when the warm pool is empty")
      ->capture_default_str();
  cmd->add_option("--warm-pool", o.cfg.platform.warm_pool_size, "Pre-warmed instance count")
      ->capture_default_str();
  cmd->add_option("--timeout-ms", o.cfg.platform.timeout_ms, "Per-attempt execution deadline")
      ->capture_default_str();
  cmd->add_option("--max-retries", o.cfg.platform.max_retries,
                  "Re-invocations after a failed attempt")
      ->capture_default_str();
  cmd->add_option("--fail-rate", o.cfg.platform.fail_rate,
                  "Per-attempt injected crash probability")
      ->capture_default_str();
  cmd->add_option("--max-concurrency", o.cfg.platform.max_concurrency,
                  "Running-instance cap, 0 for unbounded")
      ->capture_default_str();
  cmd->add_option("--shards", o.cfg.kv.shards, "KV store shard count")->capture_default_str();
  cmd->add_option("--kv-base-latency-ms", o.cfg.kv.base_latency_ms,
                  "Fixed cost per KV operation")
      ->capture_default_str();
  cmd->add_option("--kv-per-kib-ms", o.cfg.kv.per_kib_ms, "Additional KV cost per KiB moved")
      ->capture_default_str();
  cmd->add_option("--max-task-fanout", o.cfg.max_task_fanout,
                  "Widest fan-out an executor handles itself; wider ones are "
                  "delegated to the storage-manager proxy")
      ->capture_default_str();
  cmd->add_option("--num-invokers", o.cfg.num_invokers,
                  "Invoker pool width (launch pool, storage-manager pool, "
                  "parallel-invoker pool)")
      ->capture_default_str();
  cmd->add_option("--inline-threshold", o.cfg.inline_threshold,
                  "Largest value, in bytes, passed to a spawned executor by "
                  "copy instead of by store key")
      ->capture_default_str();
  cmd->add_option("--tcp-notify-ms", o.cfg.tcp_notify_ms,
                  "strawman: per-side transport cost of one completion "
                  "notification")
      ->capture_default_str();
  cmd->add_option("--sched-proc-ms", o.cfg.sched_proc_ms,
                  "Centralized engines: scheduler processing cost per "
                  "completion")
      ->capture_default_str();
  cmd->add_option("--seed", o.cfg.seed, "Run seed: workload inputs, run id, fault plan")
      ->capture_default_str();
  cmd->add_option("--clock", o.clock, "Clock mode")
      ->check(CLI::IsMember({"virtual", "wall"}))
      ->capture_default_str();
  cmd->add_option("--report", o.report_path, "Write the JSON report here instead of stdout");
}

void add_workload_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--workload", o.workload, "Workload family")
      ->check(CLI::IsMember({"tr", "gemm", "file"}))
      ->capture_default_str();
  cmd->add_option("--size", o.size, "tr: input count (power of two); gemm: matrix dimension")
      ->capture_default_str();
  cmd->add_option("--block", o.block, "gemm: tile dimension (divides --size)")
      ->capture_default_str();
  cmd->add_option("--delay-ms", o.delay_ms, "tr: injected per-task compute time")
      ->capture_default_str();
  cmd->add_option("--dag", o.dag_path, "file: DAG description to load");
  cmd->add_option("--emit-dag", o.emit_dag_path, "Also write the generated DAG to this path");
}

TaskGraph build_workload(const Options& o, const OpRegistry& reg) {
  TaskGraph g;
  if (o.workload == "tr") {
    g = tree_reduction(o.size, o.delay_ms);
  } else if (o.workload == "gemm") {
    g = blocked_gemm(o.size, o.block, o.cfg.seed).graph;
  } else {
    if (o.dag_path.empty()) throw Error("--workload file requires --dag");
    g = load_dag_file(o.dag_path, reg);
  }
  if (!o.emit_dag_path.empty()) save_dag_file(g, o.emit_dag_path);
  return g;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << "\n";
}

int do_run(Options& o) {
  OpRegistry reg;
  TaskGraph g = build_workload(o, reg);
  auto kind = engine_from_name(o.engine);
  if (!kind) throw Error("unknown engine: " + o.engine);
  o.cfg.engine = *kind;
  o.cfg.clock_mode = o.clock == "wall" ? ClockMode::Wall : ClockMode::Virtual;

  EventLog log;
  RunOutcome out = execute_run(g, reg, o.cfg, log);
  RunReport report = build_report(o.cfg, g, log, out);
  write_json(report.to_json(), o.report_path);

  if (!out.ok) {
    std::cerr << "run failed: " << out.error << "\n";
    return 1;
  }
  if (!o.no_oracle) {
    OracleResult oracle = evaluate_sequential(g, reg);
    if (out.sink_values.size() != oracle.sink_values.size()) {
      std::cerr << "oracle mismatch: engine produced " << out.sink_values.size()
                << " sink values, oracle " << oracle.sink_values.size() << "\n";
      return 1;
    }
    for (const auto& [task, expect] : oracle.sink_values) {
      auto it = out.sink_values.find(task);
      if (it == out.sink_values.end() || !value_equal(*it->second, expect)) {
        std::cerr << "oracle mismatch at sink " << task << "\n";
        return 1;
      }
    }
    std::cerr << "oracle: " << oracle.sink_values.size() << " sink value(s) match\n";
  }
  std::cerr << "makespan " << report.makespan_ms << " ms, " << report.executors_invoked
            << " invocations, " << log.size() << " events\n";
  return 0;
}

int do_trend(Options& o) {
  OpRegistry reg;
  std::vector<EngineKind> kinds;
  std::vector<std::string> names = o.engines.empty() ? all_engine_names() : o.engines;
  for (const std::string& n : names) {
    auto k = engine_from_name(n);
    if (!k) throw Error("unknown engine: " + n);
    kinds.push_back(*k);
  }
  TrendReport tr = run_trend(kinds, o.delays, o.repeats, o.size, o.cfg, reg);
  write_json(tr.to_json(), o.report_path);

  std::cerr << std::left << std::setw(18) << "engine" << std::right << std::setw(10) << "delay_ms"
            << std::setw(14) << "min_ms" << std::setw(14) << "mean_ms" << std::setw(14) << "max_ms"
            << "\n";
  for (const TrendCell& c : tr.cells)
    std::cerr << std::left << std::setw(18) << c.engine << std::right << std::setw(10)
              << c.delay_ms << std::setw(14) << c.min_ms << std::setw(14) << c.mean_ms
              << std::setw(14) << c.max_ms << "\n";
  if (tr.ordering_ok) {
    std::cerr << "ordering: ok\n";
  } else {
    std::cerr << "ordering: VIOLATED\n";
    for (const std::string& v : tr.ordering_violations) std::cerr << "  " << v << "\n";
  }
  return 0;
}

int do_breakdown(Options& o) {
  std::ifstream in(o.in_path);
  if (!in) throw Error("cannot read " + o.in_path);
  nlohmann::json report = nlohmann::json::parse(in);
  write_json(phase_cdfs(report), o.report_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serverless DAG engine simulator"};
  app.require_subcommand(1);
  Options o;

  CLI::App* run = app.add_subcommand("run", "Execute one workload and report");
  add_workload_flags(run, o);
  run->add_option("--engine", o.engine, "Engine")
      ->check(CLI::IsMember(all_engine_names()))
      ->capture_default_str();
  add_engine_flags(run, o);
  run->add_flag("--no-oracle", o.no_oracle, "Skip sink validation against the reference evaluator");

  CLI::App* trend = app.add_subcommand("trend", "Engine x delay makespan sweep over tree reduction");
  trend->add_option("--size", o.size, "tr input count (power of two)")->capture_default_str();
  trend->add_option("--engines", o.engines, "Engines to sweep (default: all)")->delimiter(',');
  trend->add_option("--delays", o.delays, "Per-task delays in ms")
      ->delimiter(',')
      ->capture_default_str();
  trend->add_option("--repeats", o.repeats, "Runs per cell")->capture_default_str();
  add_engine_flags(trend, o);

  CLI::App* breakdown =
      app.add_subcommand("breakdown", "Per-phase latency CDFs from a run report");
  breakdown->add_option("--in", o.in_path, "Run report JSON")->required();
  breakdown->add_option("--report", o.report_path, "Write the CDF table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return do_run(o);
    if (trend->parsed()) return do_trend(o);
    if (breakdown->parsed()) return do_breakdown(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
