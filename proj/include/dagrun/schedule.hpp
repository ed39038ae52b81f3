#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dagrun/task_graph.hpp"

namespace dagrun {

// Ops are addressed inside a schedule by string keys: "t:<task>",
// "fi:<fanin-id>", "fo:<fanout-id>". Keys are stable across schedules of the
// same graph, so an executor spawned at a fan-out edge can be handed its
// parent's schedule plus an entry key.
using OpKey = std::string;

enum class ScheduleOpKind { TaskExec, FanOut, FanIn };

struct ScheduleOp {
  ScheduleOpKind kind = ScheduleOpKind::TaskExec;

  // TaskExec
  TaskId task;                      // also the fan-out source / fan-in target
  std::optional<OpKey> next;        // TaskExec: following op; FanIn: continuation

  // FanOut / FanIn
  std::string id;                   // content-derived coordination id
  std::vector<OpKey> targets;       // FanOut: one key per out-edge, ordered by target task
  std::vector<TaskId> in_edges;     // FanIn: every upstream source (global in-degree)
};

struct StaticSchedule {
  TaskId leaf;
  OpKey entry;
  std::map<OpKey, ScheduleOp> ops;

  const ScheduleOp& op(const OpKey& k) const;
  std::set<TaskId> task_set() const;
};

struct ScheduleSet {
  std::vector<StaticSchedule> schedules;   // sorted by leaf id
  std::map<std::string, int> fanin_degrees;                 // fanin id -> in-degree
  std::map<std::string, std::set<TaskId>> fanin_edges;      // fanin id -> legal upstreams
  std::map<std::string, TaskId> fanin_targets;              // fanin id -> task it guards

  const StaticSchedule& for_leaf(const TaskId& leaf) const;
};

// Ids derive from graph position (source/target plus sorted neighbor ids), so
// the same fan-in or fan-out carries one id in every schedule that contains it
// and distinct coordination points never collide.
std::string fanin_id(const TaskId& target, std::vector<TaskId> sources);
std::string fanout_id(const TaskId& source, std::vector<TaskId> targets);

// One DFS-derived schedule per leaf: all tasks reachable from the leaf, the
// coordination ops between them, and the in-edges of every included fan-in
// (even when a source lies outside the schedule).
ScheduleSet generate_schedules(const TaskGraph& g);

// Normalization pass: a degree-1 fan-out is spliced between any two task
// execs that would otherwise be adjacent. generate_schedules applies this;
// exposed separately because it is idempotent and unit-tested as such.
void insert_trivial_fanouts(StaticSchedule& s);

nlohmann::json schedule_set_to_json(const ScheduleSet& set);
// Byte-stable serialization (sorted maps, fixed indent): equal sets produce
// equal bytes.
std::string schedule_set_to_string(const ScheduleSet& set);

}  // namespace dagrun
