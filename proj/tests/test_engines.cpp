#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <set>

#include "dagrun/engines.hpp"
#include "dagrun/workloads.hpp"
#include "graph_fixtures.hpp"

using namespace dagrun;

namespace {

const std::vector<EngineKind> kAllEngines = {EngineKind::Wukong, EngineKind::Strawman,
                                             EngineKind::PubSub, EngineKind::ParallelInvoker};

RunOutcome run_engine(EngineKind kind, const TaskGraph& g, EventLog& log,
                      std::function<void(RunConfig&)> tweak = {}) {
  OpRegistry reg;
  RunConfig cfg;
  cfg.engine = kind;
  if (tweak) tweak(cfg);
  return execute_run(g, reg, cfg, log);
}

}  // namespace

TEST_CASE("engine names round-trip") {
  CHECK(all_engine_names().size() == 4);
  for (EngineKind k : kAllEngines) {
    auto back = engine_from_name(engine_name(k));
    REQUIRE(back.has_value());
    CHECK(*back == k);
  }
  CHECK_FALSE(engine_from_name("qbert").has_value());
}

TEST_CASE("every engine reproduces the sequential oracle exactly") {
  OpRegistry reg;
  std::vector<TaskGraph> graphs;
  graphs.push_back(fixtures::seven_task());
  graphs.push_back(tree_reduction(64, 1.0));
  graphs.push_back(blocked_gemm(16, 4, 42).graph);

  for (const auto& g : graphs) {
    auto oracle = evaluate_sequential(g, reg);
    for (EngineKind kind : kAllEngines) {
      CAPTURE(engine_name(kind));
      EventLog log;
      auto out = run_engine(kind, g, log);
      REQUIRE(out.ok);
      REQUIRE(out.sink_values.size() == oracle.sink_values.size());
      for (auto& [task, want] : oracle.sink_values) {
        REQUIRE(out.sink_values.count(task) == 1);
        CHECK(value_equal(*out.sink_values.at(task), want));
      }
      CHECK(log.count(EventKind::TaskStart) == g.task_count());
      CHECK(log.count(EventKind::TaskEnd) == g.task_count());
    }
  }
}

TEST_CASE("centralized engines dispatch one invocation per task") {
  auto g = fixtures::seven_task();
  for (EngineKind kind : {EngineKind::Strawman, EngineKind::PubSub, EngineKind::ParallelInvoker}) {
    CAPTURE(engine_name(kind));
    EventLog log;
    auto out = run_engine(kind, g, log);
    REQUIRE(out.ok);
    CHECK(log.count(EventKind::Invoke) == 7);
    CHECK(out.proxy_invocations == 0);
    CHECK(out.max_distinct_fanin_winners == 0);  // no fan-in records in play
  }
}

TEST_CASE("completion notifications ride the engine's transport") {
  auto g = fixtures::seven_task();  // 7 tasks, 1 sink

  EventLog log;
  auto out = run_engine(EngineKind::Strawman, g, log);
  REQUIRE(out.ok);
  // One direct notification per task; the only pub/sub traffic is the final.
  CHECK(log.count(EventKind::TcpNotify) == 7);
  CHECK(log.count(EventKind::Publish) == 1);
  for (auto& e : log.snapshot())
    if (e.kind == EventKind::Invoke) CHECK(e.instance == "scheduler");

  auto out2 = run_engine(EngineKind::PubSub, g, log);
  REQUIRE(out2.ok);
  // Done messages move onto the store: one publish per task plus the final.
  CHECK(log.count(EventKind::TcpNotify) == 0);
  CHECK(log.count(EventKind::Publish) == 8);
  for (auto& e : log.snapshot())
    if (e.kind == EventKind::Invoke) CHECK(e.instance == "scheduler");
}

TEST_CASE("the parallel invoker spreads dispatch over its pool") {
  auto g = tree_reduction(64, 1.0);  // 32 leaves, 63 tasks
  EventLog log;
  auto out = run_engine(EngineKind::ParallelInvoker, g, log);
  REQUIRE(out.ok);
  CHECK(log.count(EventKind::Invoke) == 63);

  std::map<std::string, int> first_wave;  // dispatches at t=0
  for (auto& e : log.snapshot()) {
    if (e.kind != EventKind::Invoke) continue;
    CHECK(e.instance.rfind("invoker-", 0) == 0);
    if (e.t_ns == 0) first_wave[e.instance]++;
  }
  // 32 leaves over 20 workers: the first 20 dispatches go out in parallel,
  // one per worker, before any worker turns around for its second item.
  CHECK(first_wave.size() == 20);
  for (auto& [name, n] : first_wave) CHECK(n == 1);
}

TEST_CASE("the decentralized engine launches exactly one executor per leaf of a tree") {
  auto g = tree_reduction(8, 1.0);  // 4 leaves, out-degree never exceeds 1
  EventLog log;
  auto out = run_engine(EngineKind::Wukong, g, log);
  REQUIRE(out.ok);
  CHECK(log.count(EventKind::Invoke) == 4);
  CHECK(out.max_distinct_fanin_winners == 1);
}

TEST_CASE("a single-task graph runs on every engine") {
  TaskGraph g;
  g.add_task(fixtures::const_leaf("only", int64_t{7}));
  g.validate();

  for (EngineKind kind : kAllEngines) {
    CAPTURE(engine_name(kind));
    EventLog log;
    auto out = run_engine(kind, g, log);
    REQUIRE(out.ok);
    REQUIRE(out.sink_values.size() == 1);
    CHECK(value_equal(*out.sink_values.at("only"), Value{int64_t{7}}));
    CHECK(log.count(EventKind::Invoke) == 1);
  }
}

TEST_CASE("certain failure surfaces as a clean permanent-failure outcome") {
  // Central engines: the scheduler hears the first exhausted request long
  // before it has collected all seven completions.
  auto central = fixtures::seven_task();
  for (EngineKind kind :
       {EngineKind::Strawman, EngineKind::PubSub, EngineKind::ParallelInvoker}) {
    CAPTURE(engine_name(kind));
    EventLog log;
    auto out = run_engine(kind, central, log, [](RunConfig& cfg) {
      cfg.platform.fail_rate = 1.0;
      cfg.seed = 99;
    });
    CHECK_FALSE(out.ok);
    CHECK(out.error.rfind("permanent failure: request rq-", 0) == 0);
    CHECK(out.error.find("failed after 3 attempts: fault") != std::string::npos);
    CHECK(out.sink_values.empty());
  }

  // Decentralized engine: a slow chain makes more charges than any doomed
  // attempt survives, so no attempt can ever reach the sink and the lone
  // request's exhaustion is the only possible outcome.
  auto deep = fixtures::slow_chain(16);
  EventLog log;
  auto out = run_engine(EngineKind::Wukong, deep, log, [](RunConfig& cfg) {
    cfg.platform.fail_rate = 1.0;
    cfg.seed = 99;
  });
  CHECK_FALSE(out.ok);
  CHECK(out.error.rfind("permanent failure: request rq-", 0) == 0);
  CHECK(out.error.find("failed after 3 attempts: fault") != std::string::npos);
  CHECK(out.sink_values.empty());
  CHECK(log.count(EventKind::Retry) == 2);
  CHECK(log.count(EventKind::Done) == 0);
}

TEST_CASE("a short run can finish on durable side effects even when every attempt dies") {
  // With certain faults, every attempt still replays its stores and fan-in
  // registrations before crashing, and on a small graph those durable effects
  // carry the run across the line before the first exhausted request reports
  // in. No attempt ever records a clean finish.
  auto g = fixtures::seven_task();
  EventLog log;
  auto out = run_engine(EngineKind::Wukong, g, log, [](RunConfig& cfg) {
    cfg.platform.fail_rate = 1.0;
    cfg.seed = 99;
  });
  REQUIRE(out.ok);
  REQUIRE(out.sink_values.size() == 1);
  CHECK(value_equal(*out.sink_values.at("T7"), Value{int64_t{5}}));
  CHECK(log.count(EventKind::Done) == 0);
  CHECK(log.count(EventKind::Retry) > 0);
}

TEST_CASE("a concurrency-cap rejection aborts the run cleanly") {
  auto g = fixtures::seven_task();
  EventLog log;
  auto out = run_engine(EngineKind::Wukong, g, log,
                        [](RunConfig& cfg) { cfg.platform.max_concurrency = 1; });
  CHECK_FALSE(out.ok);
  CHECK(out.error.rfind("platform rejected: ", 0) == 0);
}

TEST_CASE("virtual-clock runs are byte-identical, engine by engine") {
  auto g = tree_reduction(32, 1.0);
  for (EngineKind kind : kAllEngines) {
    CAPTURE(engine_name(kind));
    EventLog log_a, log_b;
    auto a = run_engine(kind, g, log_a, [](RunConfig& cfg) { cfg.seed = 5; });
    auto b = run_engine(kind, g, log_b, [](RunConfig& cfg) { cfg.seed = 5; });
    REQUIRE(a.ok);
    REQUIRE(b.ok);
    CHECK(a.run_id == b.run_id);
    CHECK(log_a.to_jsonl() == log_b.to_jsonl());
    CHECK(!log_a.to_jsonl().empty());
  }
}

TEST_CASE("retries recover a run when later attempts succeed") {
  // At 30% per-attempt failure and three attempts, most requests recover.
  // Seed chosen so this workload completes; determinism keeps it stable.
  auto g = tree_reduction(16, 1.0);
  EventLog log;
  auto out = run_engine(EngineKind::Wukong, g, log, [](RunConfig& cfg) {
    cfg.platform.fail_rate = 0.3;
    cfg.seed = 12;
  });
  if (out.ok) {
    OpRegistry reg;
    auto oracle = evaluate_sequential(g, reg);
    for (auto& [task, want] : oracle.sink_values)
      CHECK(value_equal(*out.sink_values.at(task), want));
    CHECK(log.count(EventKind::Retry) > 0);
  } else {
    CHECK(out.error.rfind("permanent failure: ", 0) == 0);
  }
  CHECK(out.max_distinct_fanin_winners <= 1);
}
