#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dagrun/report.hpp"
#include "dagrun/workloads.hpp"

using namespace dagrun;

namespace {

struct RunArtifacts {
  RunConfig cfg;
  TaskGraph graph;
  EventLog log;
  RunOutcome out;
};

void run_tr(RunArtifacts& a, EngineKind kind, int64_t size, double delay_ms) {
  a.cfg.engine = kind;
  a.graph = tree_reduction(size, delay_ms);
  OpRegistry reg;
  a.out = execute_run(a.graph, reg, a.cfg, a.log);
}

// ---- subprocess helpers for the CLI binary ----

std::string scratch_dir() {
  static std::string dir = [] {
    auto d = std::filesystem::temp_directory_path() /
             ("dagrun-cli-test-" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d.string();
  }();
  return dir;
}

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  static int n = 0;
  std::string out_path = scratch_dir() + "/stdout_" + std::to_string(n++) + ".txt";
  std::string cmd = std::string(DAGRUN_BIN) + " " + args + " >" + out_path + " 2>/dev/null";
  int rc = std::system(cmd.c_str());
  CliResult r;
  if (WIFEXITED(rc)) r.code = WEXITSTATUS(rc);
  std::ifstream f(out_path);
  std::stringstream ss;
  ss << f.rdbuf();
  r.out = ss.str();
  return r;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  return nlohmann::json::parse(f);
}

}  // namespace

TEST_CASE("report counters reconcile with the raw event log") {
  RunArtifacts a;
  run_tr(a, EngineKind::Wukong, 64, 1.0);
  REQUIRE(a.out.ok);
  auto r = build_report(a.cfg, a.graph, a.log, a.out);

  CHECK(r.ok);
  CHECK(r.engine == "wukong");
  CHECK(r.run_id == a.out.run_id);
  CHECK(r.tasks == 63);
  CHECK(r.executors_invoked == a.log.count(EventKind::Invoke));
  CHECK(r.cold_starts == a.log.count(EventKind::ColdStart));
  CHECK(r.retries == a.log.count(EventKind::Retry));
  CHECK(r.timeouts == a.log.count(EventKind::Timeout));
  CHECK(r.kv.reads == a.log.count(EventKind::KvRead));
  CHECK(r.kv.writes == a.log.count(EventKind::KvWrite));
  CHECK(r.kv.fanin_registrations == a.log.count(EventKind::FaninRegister));
  CHECK(r.per_task.size() == 63);

  uint64_t bytes_written = 0;
  int64_t lo = INT64_MAX, hi = INT64_MIN;
  for (auto& e : a.log.snapshot()) {
    if (e.kind == EventKind::KvWrite) bytes_written += e.detail.at("bytes").get<uint64_t>();
    lo = std::min(lo, e.t_ns);
    hi = std::max(hi, e.t_ns);
  }
  CHECK(r.kv.bytes_written == bytes_written);
  CHECK(r.makespan_ms == doctest::Approx(static_cast<double>(hi - lo) / 1e6));

  REQUIRE(r.sinks.size() == 1);
  for (auto& [task, digest] : r.sinks) {
    CHECK(digest == value_digest(*a.out.sink_values.at(task)));
    CHECK(digest == "2080");  // sum of 1..64
  }
}

TEST_CASE("run report JSON carries the full schema and config echo") {
  RunArtifacts a;
  run_tr(a, EngineKind::Strawman, 8, 0.0);
  auto j = build_report(a.cfg, a.graph, a.log, a.out).to_json();

  CHECK(j.at("schema") == 1);
  CHECK(j.at("kind") == "run");
  CHECK(j.at("engine") == "strawman");
  CHECK(j.at("ok") == true);
  for (const char* key :
       {"run_id", "error", "config", "makespan_ms", "tasks", "executors_invoked", "cold_starts",
        "retries", "timeouts", "proxy_invocations", "max_distinct_fanin_winners", "kv",
        "per_task", "sinks"})
    CHECK(j.contains(key));

  CHECK(j.at("per_task").is_array());
  CHECK(j.at("per_task").size() == 7);
  for (auto& row : j.at("per_task"))
    for (const char* key : {"task", "read_ms", "compute_ms", "write_ms", "invoke_delay_ms"})
      CHECK(row.contains(key));

  auto& cfg = j.at("config");
  CHECK(cfg.at("engine") == "strawman");
  CHECK(cfg.at("clock") == "virtual");
  CHECK(cfg.at("tcp_notify_ms") == 2.0);
  CHECK(cfg.at("sched_proc_ms") == 50.0);
  CHECK(cfg.at("kv").at("shards") == 4);
  CHECK(cfg.at("platform").at("invoke_overhead_ms") == 50.0);
  CHECK(cfg.at("platform").at("max_retries") == 2);
}

TEST_CASE("value digests are short for small values, hashed for large ones") {
  CHECK(value_digest(Value{int64_t{5}}) == "5");
  CHECK(value_digest(Value{int64_t{2080}}) == "2080");

  auto big = Value{std::string(100, 'a')};
  auto d = value_digest(big);
  CHECK(d.rfind("h:", 0) == 0);
  CHECK(d.substr(d.size() - 4) == ":102");  // 100 chars plus two quotes
  CHECK(d == value_digest(big));

  Matrix m(16, 16);
  m.data[5] = 1.25;
  Matrix m2 = m;
  CHECK(value_digest(Value{m}) == value_digest(Value{m2}));
  m2.data[5] = 2.5;
  CHECK(value_digest(Value{m}) != value_digest(Value{m2}));
}

TEST_CASE("makespan of an empty log is zero") {
  EventLog log;
  CHECK(log_makespan_ms(log) == 0.0);
}

TEST_CASE("phase CDFs are sorted, normalized and sized to the task count") {
  RunArtifacts a;
  run_tr(a, EngineKind::Wukong, 64, 100.0);
  auto rj = build_report(a.cfg, a.graph, a.log, a.out).to_json();
  auto cdf = phase_cdfs(rj);

  CHECK(cdf.at("schema") == 1);
  CHECK(cdf.at("kind") == "breakdown");
  CHECK(cdf.at("engine") == "wukong");
  CHECK(cdf.at("tasks") == 63);

  auto& phases = cdf.at("phases");
  REQUIRE(phases.size() == 4);
  for (const char* ph : {"read_ms", "compute_ms", "write_ms", "invoke_delay_ms"}) {
    REQUIRE(phases.contains(ph));
    auto& pts = phases.at(ph);
    REQUIRE(pts.size() == 63);
    double prev_v = -1, prev_f = 0;
    for (auto& pt : pts) {
      double v = pt.at(0).get<double>(), f = pt.at(1).get<double>();
      CHECK(v >= prev_v);
      CHECK(f > prev_f);
      prev_v = v;
      prev_f = f;
    }
    CHECK(pts.back().at(1).get<double>() == 1.0);
  }
  // Every task carries the injected compute time.
  CHECK(phases.at("compute_ms").at(0).at(0).get<double>() >= 100.0);
}

TEST_CASE("phase CDFs require a per-task table") {
  CHECK_THROWS_AS(phase_cdfs(nlohmann::json{{"kind", "run"}}), SchemaViolation);
}

TEST_CASE("a single-engine trend sweep fills one cell per delay") {
  OpRegistry reg;
  RunConfig base;
  auto tr = run_trend({EngineKind::Wukong}, {0.0, 5.0}, 1, 32, base, reg);

  CHECK(tr.size == 32);
  CHECK(tr.repeats == 1);
  REQUIRE(tr.cells.size() == 2);
  for (auto& c : tr.cells) {
    CHECK(c.engine == "wukong");
    REQUIRE(c.makespans_ms.size() == 1);
    CHECK(c.min_ms == c.makespans_ms[0]);
    CHECK(c.mean_ms == c.makespans_ms[0]);
    CHECK(c.max_ms == c.makespans_ms[0]);
    CHECK(c.min_ms > 0);
  }
  CHECK(tr.cells[0].delay_ms == 0.0);
  CHECK(tr.cells[1].delay_ms == 5.0);
  // Fewer than four engines: nothing to order.
  CHECK(tr.ordering_ok);
  CHECK(tr.ordering_violations.empty());

  auto j = tr.to_json();
  CHECK(j.at("kind") == "trend");
  CHECK(j.at("schema") == 1);
  CHECK(j.at("cells").size() == 2);
}

TEST_CASE("trend sweeps are deterministic") {
  OpRegistry reg;
  RunConfig base;
  base.seed = 3;
  auto a = run_trend({EngineKind::Wukong, EngineKind::PubSub}, {0.0}, 2, 16, base, reg);
  auto b = run_trend({EngineKind::Wukong, EngineKind::PubSub}, {0.0}, 2, 16, base, reg);
  CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("the four-engine ordering holds on a small sweep") {
  OpRegistry reg;
  RunConfig base;
  auto tr = run_trend({EngineKind::Wukong, EngineKind::Strawman, EngineKind::PubSub,
                       EngineKind::ParallelInvoker},
                      {0.0}, 2, 64, base, reg);
  CHECK(tr.ordering_ok);
  CHECK(tr.ordering_violations.empty());
  REQUIRE(tr.cells.size() == 4);
}

TEST_CASE("trend rejects empty or zero-repeat sweeps") {
  OpRegistry reg;
  RunConfig base;
  CHECK_THROWS_AS(run_trend({EngineKind::Wukong}, {0.0}, 0, 16, base, reg), Error);
  CHECK_THROWS_AS(run_trend({}, {0.0}, 1, 16, base, reg), Error);
  CHECK_THROWS_AS(run_trend({EngineKind::Wukong}, {}, 1, 16, base, reg), Error);
}

// ---- CLI binary, driven as a subprocess ----

TEST_CASE("cli: run writes a report and validates against the oracle") {
  auto report = scratch_dir() + "/run_tr64.json";
  auto r = run_cli("run --workload tr --size 64 --engine wukong --report " + report);
  REQUIRE(r.code == 0);

  auto j = read_json(report);
  CHECK(j.at("kind") == "run");
  CHECK(j.at("engine") == "wukong");
  CHECK(j.at("ok") == true);
  CHECK(j.at("tasks") == 63);
  REQUIRE(j.at("sinks").size() == 1);
  for (auto& [task, digest] : j.at("sinks").items()) CHECK(digest == "2080");
}

TEST_CASE("cli: the report goes to stdout when no path is given") {
  auto r = run_cli("run --workload tr --size 8 --engine pubsub");
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("kind") == "run");
  CHECK(j.at("engine") == "pubsub");
  CHECK(j.at("tasks") == 7);
}

TEST_CASE("cli: argument errors exit 2, runtime errors exit 1") {
  CHECK(run_cli("run --engine bogus").code == 2);
  CHECK(run_cli("breakdown").code == 2);          // --in is required
  CHECK(run_cli("frobnicate").code == 2);         // unknown subcommand
  CHECK(run_cli("run --workload file").code == 1);  // --dag missing
  CHECK(run_cli("run --workload tr --size 10").code == 1);  // not a power of two
  CHECK(run_cli("breakdown --in " + scratch_dir() + "/absent.json").code == 1);
}

TEST_CASE("cli: breakdown turns a run report into phase CDFs") {
  auto report = scratch_dir() + "/run_for_breakdown.json";
  REQUIRE(run_cli("run --workload tr --size 16 --delay-ms 20 --report " + report).code == 0);

  auto cdfs = scratch_dir() + "/breakdown.json";
  auto r = run_cli("breakdown --in " + report + " --report " + cdfs);
  REQUIRE(r.code == 0);
  auto j = read_json(cdfs);
  CHECK(j.at("kind") == "breakdown");
  CHECK(j.at("tasks") == 15);
  CHECK(j.at("phases").size() == 4);
}

TEST_CASE("cli: gemm workload runs on a centralized engine") {
  auto report = scratch_dir() + "/run_gemm.json";
  auto r = run_cli("run --workload gemm --size 16 --block 4 --engine strawman --no-oracle"
                   " --report " + report);
  REQUIRE(r.code == 0);
  auto j = read_json(report);
  CHECK(j.at("ok") == true);
  // 32 input tiles, 64 partial products, 16 per-tile sums.
  CHECK(j.at("tasks") == 32 + 64 + 16);
}

TEST_CASE("cli: emitted DAG files round-trip through the file workload") {
  auto dag = scratch_dir() + "/tr8.json";
  REQUIRE(run_cli("run --workload tr --size 8 --emit-dag " + dag).code == 0);

  OpRegistry reg;
  auto loaded = load_dag_file(dag, reg);
  CHECK(loaded.structurally_equal(tree_reduction(8, 0.0)));

  auto report = scratch_dir() + "/rerun.json";
  auto r = run_cli("run --workload file --dag " + dag + " --engine parallel-invoker --report " +
                   report);
  REQUIRE(r.code == 0);
  CHECK(read_json(report).at("ok") == true);
}

TEST_CASE("cli: a failing run reports and exits nonzero") {
  auto report = scratch_dir() + "/failed.json";
  auto r = run_cli("run --workload tr --size 16 --engine wukong --fail-rate 1 --report " + report);
  CHECK(r.code == 1);
  auto j = read_json(report);
  CHECK(j.at("ok") == false);
  auto err = j.at("error").get<std::string>();
  CHECK(err.find("failed after 3 attempts") != std::string::npos);
}

TEST_CASE("cli: a small trend sweep reports its cells") {
  auto report = scratch_dir() + "/trend.json";
  auto r = run_cli("trend --size 32 --engines wukong --delays 0 --repeats 1 --report " + report);
  REQUIRE(r.code == 0);
  auto j = read_json(report);
  CHECK(j.at("kind") == "trend");
  CHECK(j.at("cells").size() == 1);
  CHECK(j.at("ordering_ok") == true);
}
