#include "dagrun/schedule.hpp"

#include <algorithm>

#include "dagrun/errors.hpp"
#include "dagrun/hash.hpp"

namespace dagrun {

const ScheduleOp& StaticSchedule::op(const OpKey& k) const {
  auto it = ops.find(k);
  if (it == ops.end()) throw Error("schedule for leaf " + leaf + " has no op " + k);
  return it->second;
}

std::set<TaskId> StaticSchedule::task_set() const {
  std::set<TaskId> out;
  for (const auto& [k, op] : ops)
    if (op.kind == ScheduleOpKind::TaskExec) out.insert(op.task);
  return out;
}

const StaticSchedule& ScheduleSet::for_leaf(const TaskId& leaf) const {
  for (const auto& s : schedules)
    if (s.leaf == leaf) return s;
  throw Error("no schedule rooted at leaf " + leaf);
}

std::string fanin_id(const TaskId& target, std::vector<TaskId> sources) {
  std::sort(sources.begin(), sources.end());
  std::string content = "fanin|" + target;
  for (const auto& s : sources) content += "|" + s;
  return "fi-" + hex16(fnv1a64(content));
}

std::string fanout_id(const TaskId& source, std::vector<TaskId> targets) {
  std::sort(targets.begin(), targets.end());
  std::string content = "fanout|" + source;
  for (const auto& t : targets) content += "|" + t;
  return "fo-" + hex16(fnv1a64(content));
}

namespace {

OpKey task_key(const TaskId& t) { return "t:" + t; }
OpKey fanin_key(const std::string& id) { return "fi:" + id; }
OpKey fanout_key(const std::string& id) { return "fo:" + id; }

}  // namespace

void insert_trivial_fanouts(StaticSchedule& s) {
  // Collect the splices first; mutating `ops` while iterating it would
  // invalidate the loop.
  std::vector<std::pair<OpKey, OpKey>> splices;  // (taskexec key, successor taskexec key)
  for (const auto& [key, op] : s.ops) {
    if (op.kind != ScheduleOpKind::TaskExec || !op.next) continue;
    const ScheduleOp& next = s.op(*op.next);
    if (next.kind == ScheduleOpKind::TaskExec) splices.emplace_back(key, *op.next);
  }
  for (const auto& [from_key, to_key] : splices) {
    ScheduleOp& from = s.ops.at(from_key);
    const ScheduleOp& to = s.ops.at(to_key);
    ScheduleOp fo;
    fo.kind = ScheduleOpKind::FanOut;
    fo.task = from.task;
    fo.id = fanout_id(from.task, {to.task});
    fo.targets = {to_key};
    OpKey fo_key = fanout_key(fo.id);
    from.next = fo_key;
    s.ops.emplace(fo_key, std::move(fo));
  }
}

ScheduleSet generate_schedules(const TaskGraph& g) {
  if (!g.validated()) throw Error("generate_schedules requires a validated graph");

  ScheduleSet set;

  // Global coordination ops, shared across schedules.
  std::map<TaskId, ScheduleOp> fanins;   // keyed by guarded task
  std::map<TaskId, ScheduleOp> fanouts;  // keyed by source task, degree >= 2 only
  for (const auto& [id, n] : g.nodes()) {
    if (n.deps.size() >= 2) {
      ScheduleOp fi;
      fi.kind = ScheduleOpKind::FanIn;
      fi.task = id;
      fi.in_edges = n.deps;
      std::sort(fi.in_edges.begin(), fi.in_edges.end());
      fi.id = fanin_id(id, fi.in_edges);
      fi.next = task_key(id);
      set.fanin_degrees[fi.id] = static_cast<int>(fi.in_edges.size());
      set.fanin_edges[fi.id] = {fi.in_edges.begin(), fi.in_edges.end()};
      set.fanin_targets[fi.id] = id;
      fanins.emplace(id, std::move(fi));
    }
    const auto& outs = g.out_edges(id);
    if (outs.size() >= 2) {
      ScheduleOp fo;
      fo.kind = ScheduleOpKind::FanOut;
      fo.task = id;
      fo.id = fanout_id(id, outs);
      for (const auto& t : outs) fo.targets.push_back(task_key(t));
      fanouts.emplace(id, std::move(fo));
    }
  }
  // Out-edges can point at tasks later in the map walk, so fan-in keys are
  // only patched into fan-out targets once every fan-in exists.
  for (auto& [src, fo] : fanouts) {
    const auto& outs = g.out_edges(src);
    for (size_t i = 0; i < outs.size(); ++i)
      if (g.in_degree(outs[i]) >= 2) fo.targets[i] = fanin_key(fanins.at(outs[i]).id);
  }

  for (const auto& leaf : g.leaves()) {
    StaticSchedule s;
    s.leaf = leaf;
    s.entry = task_key(leaf);

    // Reachable task set, lexicographic DFS.
    std::set<TaskId> reach;
    std::vector<TaskId> stack{leaf};
    while (!stack.empty()) {
      TaskId t = stack.back();
      stack.pop_back();
      if (!reach.insert(t).second) continue;
      for (const auto& nxt : g.out_edges(t)) stack.push_back(nxt);
    }

    for (const auto& t : reach) {
      ScheduleOp te;
      te.kind = ScheduleOpKind::TaskExec;
      te.task = t;
      const auto& outs = g.out_edges(t);
      if (outs.size() >= 2) {
        te.next = fanout_key(fanouts.at(t).id);
      } else if (outs.size() == 1) {
        const TaskId& succ = outs[0];
        // Degree-1 edge into a join goes straight to the fan-in; the trivial
        // fan-out pass below handles the plain task-to-task case.
        te.next = g.in_degree(succ) >= 2 ? fanin_key(fanins.at(succ).id) : task_key(succ);
      }
      s.ops.emplace(task_key(t), std::move(te));
      if (outs.size() >= 2) {
        const ScheduleOp& fo = fanouts.at(t);
        s.ops.emplace(fanout_key(fo.id), fo);
      }
      if (g.in_degree(t) >= 2) {
        const ScheduleOp& fi = fanins.at(t);
        s.ops.emplace(fanin_key(fi.id), fi);
      }
    }
    insert_trivial_fanouts(s);
    set.schedules.push_back(std::move(s));
  }
  return set;  // leaves() is sorted, so schedules are too
}

nlohmann::json schedule_set_to_json(const ScheduleSet& set) {
  nlohmann::json js = nlohmann::json::array();
  for (const auto& s : set.schedules) {
    nlohmann::json ops = nlohmann::json::object();
    for (const auto& [key, op] : s.ops) {
      nlohmann::json jo;
      switch (op.kind) {
        case ScheduleOpKind::TaskExec:
          jo["kind"] = "task";
          jo["task"] = op.task;
          if (op.next) jo["next"] = *op.next;
          break;
        case ScheduleOpKind::FanOut:
          jo["kind"] = "fanout";
          jo["id"] = op.id;
          jo["source"] = op.task;
          jo["targets"] = op.targets;
          break;
        case ScheduleOpKind::FanIn:
          jo["kind"] = "fanin";
          jo["id"] = op.id;
          jo["target"] = op.task;
          jo["in_edges"] = op.in_edges;
          jo["next"] = *op.next;
          break;
      }
      ops[key] = jo;
    }
    js.push_back({{"leaf", s.leaf}, {"entry", s.entry}, {"ops", ops}});
  }
  return nlohmann::json{{"version", 1},
                        {"schedules", js},
                        {"fanin_degrees", set.fanin_degrees}};
}

std::string schedule_set_to_string(const ScheduleSet& set) {
  return schedule_set_to_json(set).dump(1);
}

}  // namespace dagrun
