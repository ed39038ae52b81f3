#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "dagrun/errors.hpp"
#include "dagrun/schedule.hpp"
#include "graph_fixtures.hpp"

using namespace dagrun;

namespace {

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

bool is_hex16_id(const std::string& id, const std::string& prefix) {
  if (!starts_with(id, prefix) || id.size() != prefix.size() + 16) return false;
  return std::all_of(id.begin() + prefix.size(), id.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
  });
}

}  // namespace

TEST_CASE("coordination ids are content-derived, order-insensitive, distinct") {
  auto fi = fanin_id("T4", {"T1", "T3"});
  CHECK(is_hex16_id(fi, "fi-"));
  CHECK(fanin_id("T4", {"T3", "T1"}) == fi);  // sources sorted internally
  CHECK(fanin_id("T6", {"T4", "T5"}) != fi);
  CHECK(fanin_id("T4", {"T1", "T3", "T9"}) != fi);

  auto fo = fanout_id("T3", {"T4", "T5"});
  CHECK(is_hex16_id(fo, "fo-"));
  CHECK(fanout_id("T3", {"T5", "T4"}) == fo);
  CHECK(fanout_id("T2", {"T4", "T5"}) != fo);
}

TEST_CASE("seven-task graph yields one schedule per leaf, sorted") {
  auto g = fixtures::seven_task();
  auto set = generate_schedules(g);

  REQUIRE(set.schedules.size() == 2);
  CHECK(set.schedules[0].leaf == "T1");
  CHECK(set.schedules[1].leaf == "T2");
  CHECK(set.schedules[0].entry == "t:T1");
  CHECK(set.schedules[1].entry == "t:T2");

  CHECK(set.for_leaf("T1").task_set() == std::set<TaskId>{"T1", "T4", "T6", "T7"});
  CHECK(set.for_leaf("T2").task_set() ==
        std::set<TaskId>{"T2", "T3", "T4", "T5", "T6", "T7"});

  // The join tasks appear in both schedules; only one executor will win the
  // fan-in at run time, but each path must know how to continue.
  for (const auto& s : set.schedules) {
    auto tasks = s.task_set();
    CHECK(tasks.count("T4") == 1);
    CHECK(tasks.count("T6") == 1);
  }
}

TEST_CASE("fan-in records carry global in-degree and sorted edges") {
  auto g = fixtures::seven_task();
  auto set = generate_schedules(g);

  REQUIRE(set.fanin_degrees.size() == 2);
  std::set<TaskId> guarded;
  for (const auto& [id, degree] : set.fanin_degrees) {
    CHECK(degree == 2);
    guarded.insert(set.fanin_targets.at(id));
    const auto& edges = set.fanin_edges.at(id);
    CHECK(edges.size() == 2);
  }
  CHECK(guarded == std::set<TaskId>{"T4", "T6"});

  auto t4_fanin = fanin_id("T4", {"T1", "T3"});
  CHECK(set.fanin_edges.at(t4_fanin) == std::set<TaskId>{"T1", "T3"});
  CHECK(set.fanin_targets.at(t4_fanin) == "T4");

  // T1's schedule contains the T4 fan-in, and its in_edges list T3 even
  // though T3 never executes on that schedule.
  const auto& s1 = set.for_leaf("T1");
  const auto& op = s1.op("fi:" + t4_fanin);
  REQUIRE(op.kind == ScheduleOpKind::FanIn);
  CHECK(op.in_edges == std::vector<TaskId>{"T1", "T3"});
  CHECK(op.next == OpKey{"t:T4"});
  CHECK(s1.ops.count("t:T3") == 0);
}

TEST_CASE("degree-1 edge into a join goes straight to the fan-in key") {
  auto g = fixtures::seven_task();
  auto set = generate_schedules(g);

  const auto& t1 = set.for_leaf("T1").op("t:T1");
  REQUIRE(t1.next.has_value());
  CHECK(*t1.next == "fi:" + fanin_id("T4", {"T1", "T3"}));
}

TEST_CASE("multi-edge fan-out targets are patched to fan-in keys where needed") {
  auto g = fixtures::seven_task();
  auto set = generate_schedules(g);
  const auto& s2 = set.for_leaf("T2");

  auto fo_key = "fo:" + fanout_id("T3", {"T4", "T5"});
  CHECK(s2.op("t:T3").next == OpKey{fo_key});

  const auto& fo = s2.op(fo_key);
  REQUIRE(fo.kind == ScheduleOpKind::FanOut);
  CHECK(fo.task == "T3");
  // Ordered by target task: the T4 edge lands on T4's fan-in, the T5 edge on
  // the task itself.
  CHECK(fo.targets == std::vector<OpKey>{"fi:" + fanin_id("T4", {"T1", "T3"}), "t:T5"});
}

TEST_CASE("no TaskExec points directly at another TaskExec after normalization") {
  for (const auto& g :
       {fixtures::seven_task(), fixtures::chain(6), fixtures::diamond(), fixtures::star(4)}) {
    auto set = generate_schedules(g);
    for (const auto& s : set.schedules) {
      for (const auto& [key, op] : s.ops) {
        if (op.kind != ScheduleOpKind::TaskExec || !op.next) continue;
        CHECK(s.op(*op.next).kind != ScheduleOpKind::TaskExec);
      }
    }
  }
}

TEST_CASE("plain chain edges get trivial fan-outs spliced in") {
  auto g = fixtures::chain(5);
  auto set = generate_schedules(g);
  REQUIRE(set.schedules.size() == 1);
  const auto& s = set.schedules[0];

  // 5 task execs plus 4 single-target fan-outs, no fan-ins anywhere.
  CHECK(s.ops.size() == 9);
  CHECK(set.fanin_degrees.empty());

  int fanouts = 0;
  for (const auto& [key, op] : s.ops) {
    if (op.kind != ScheduleOpKind::FanOut) continue;
    ++fanouts;
    CHECK(op.targets.size() == 1);
    CHECK(starts_with(op.targets[0], "t:"));
  }
  CHECK(fanouts == 4);

  CHECK(s.op("t:C02").next == OpKey{"fo:" + fanout_id("C02", {"C03"})});
}

TEST_CASE("star fan-out lists every edge ordered by target task") {
  auto g = fixtures::star(6);
  auto set = generate_schedules(g);
  REQUIRE(set.schedules.size() == 1);
  const auto& s = set.schedules[0];

  auto fo_key = *s.op("t:L").next;
  const auto& fo = s.op(fo_key);
  REQUIRE(fo.kind == ScheduleOpKind::FanOut);
  REQUIRE(fo.targets.size() == 6);
  for (int i = 0; i < 6; ++i) {
    char want[8];
    std::snprintf(want, sizeof want, "t:S%02d", i);
    CHECK(fo.targets[i] == want);
  }
  // Sinks terminate their path.
  CHECK_FALSE(s.op("t:S03").next.has_value());
}

TEST_CASE("insert_trivial_fanouts is idempotent") {
  auto g = fixtures::seven_task();
  auto set = generate_schedules(g);
  auto before = schedule_set_to_string(set);

  for (auto& s : set.schedules) insert_trivial_fanouts(s);
  CHECK(schedule_set_to_string(set) == before);
}

TEST_CASE("serialization is byte-stable across independent builds") {
  auto a = schedule_set_to_string(generate_schedules(fixtures::seven_task()));
  auto b = schedule_set_to_string(generate_schedules(fixtures::seven_task()));
  CHECK(a == b);
  CHECK(!a.empty());

  auto c = schedule_set_to_string(generate_schedules(fixtures::diamond()));
  CHECK(c != a);
}

TEST_CASE("generation requires a validated graph") {
  TaskGraph g;
  g.add_task(fixtures::const_leaf("only", int64_t{1}));
  CHECK_THROWS_AS(generate_schedules(g), Error);
}
