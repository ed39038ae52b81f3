#include "dagrun/executor.hpp"

#include <map>
#include <set>
#include <vector>

#include "dagrun/errors.hpp"

namespace dagrun {
namespace {

// The edge an executor continues on itself: the first task-headed target in
// edge order, falling back to the first fan-in-headed one. Task-headed edges
// keep the executor growing down a chain instead of racing into a fan-in it
// will probably lose.
const OpKey& pick_become(const std::vector<OpKey>& targets) {
  for (const OpKey& t : targets)
    if (t.rfind("t:", 0) == 0) return t;
  return targets.front();
}

}  // namespace

WalkEnd run_executor(const RunContext& rc, FunctionContext& ctx, const InvocationRequest& req) {
  const StaticSchedule& sched = rc.schedules.for_leaf(req.schedule_leaf);

  std::map<TaskId, ValuePtr> cache;
  std::set<TaskId> stored;  // cache entries known to be in the KV store
  for (const InputBinding& b : req.inline_inputs) {
    cache[b.task] = b.value;
    if (b.in_kv) stored.insert(b.task);
  }

  OpKey pos = req.entry_key.empty() ? sched.entry : req.entry_key;
  TaskId arriving = req.arrived_from;

  // task_end is deferred until the task's value has been handed off (next
  // exec, fan-out, fan-in registration or final store), so the write and
  // coordination costs land on the task that produced the value.
  struct PendingEnd {
    bool active = false;
    TaskId task;
    int64_t start_ns = 0;
    double read0 = 0;
    double compute0 = 0;
    double write0 = 0;
    bool first_of_request = false;
  };
  PendingEnd pending;
  bool first_task = true;

  auto flush = [&]() {
    if (!pending.active) return;
    double invoke_delay =
        pending.first_of_request
            ? static_cast<double>(pending.start_ns - ctx.invoked_at_ns()) / 1e6
            : 0.0;
    rc.log.append(ctx.now_ns(), EventKind::TaskEnd, ctx.instance(), ctx.request_id(),
                  {{"task", pending.task},
                   {"read_ms", ctx.phase_ms(Phase::Read) - pending.read0},
                   {"compute_ms", ctx.phase_ms(Phase::Compute) - pending.compute0},
                   {"write_ms", ctx.phase_ms(Phase::Write) - pending.write0},
                   {"invoke_delay_ms", invoke_delay}});
    pending.active = false;
  };

  auto out_key = [&rc](const TaskId& t) { return KvStore::key("out", rc.run_id, t); };

  // Writes a locally held value once. Values not in the cache were produced
  // by some other executor, which stored them under this same rule before
  // any consumer could need them.
  auto ensure_stored = [&](const TaskId& t) {
    if (stored.count(t)) return;
    auto it = cache.find(t);
    if (it == cache.end()) return;
    rc.platform.enforce_connectivity(ctx.instance(), CommAction::KvOp);
    rc.kv.put(ctx, out_key(t), it->second);
    stored.insert(t);
  };

  for (;;) {
    const ScheduleOp& op = sched.op(pos);
    switch (op.kind) {
      case ScheduleOpKind::TaskExec: {
        flush();
        const TaskNode& node = rc.graph.node(op.task);
        pending = PendingEnd{true,
                             op.task,
                             ctx.now_ns(),
                             ctx.phase_ms(Phase::Read),
                             ctx.phase_ms(Phase::Compute),
                             ctx.phase_ms(Phase::Write),
                             first_task};
        first_task = false;
        rc.log.append(ctx.now_ns(), EventKind::TaskStart, ctx.instance(), ctx.request_id(),
                      {{"task", op.task}});
        std::vector<Value> args;
        args.reserve(node.deps.size() + node.inline_args.size());
        for (const TaskId& dep : node.deps) {
          auto it = cache.find(dep);
          if (it == cache.end()) {
            rc.platform.enforce_connectivity(ctx.instance(), CommAction::KvOp);
            auto v = rc.kv.get(ctx, out_key(dep));
            if (!v) throw ProtocolViolation("input " + dep + " of " + op.task + " not stored");
            it = cache.emplace(dep, *v).first;
            stored.insert(dep);
          }
          args.push_back(*it->second);
        }
        for (const Value& a : node.inline_args) args.push_back(a);
        double delay = op_delay_ms(node.op);
        if (delay > 0) ctx.charge_ms(delay, Phase::Compute);
        cache[op.task] = make_value(apply_op(node.op, args, rc.registry, op.task));
        if (!op.next) {
          rc.platform.enforce_connectivity(ctx.instance(), CommAction::Publish);
          rc.kv.store_final(ctx, rc.run_id, op.task, cache[op.task]);
          flush();
          return WalkEnd::PathComplete;
        }
        arriving = op.task;
        pos = *op.next;
        break;
      }

      case ScheduleOpKind::FanOut: {
        if (op.targets.empty())
          throw ProtocolViolation("fan-out " + op.id + " has no targets");
        if (op.targets.size() == 1) {
          // Degree 1 is a plain continuation; nothing leaves this executor.
          pos = op.targets.front();
          break;
        }
        const TaskId& src = op.task;
        auto vit = cache.find(src);
        if (vit == cache.end())
          throw ProtocolViolation("fan-out " + op.id + " source " + src + " not held locally");
        ValuePtr v = vit->second;
        bool small = value_bytes(*v) <= static_cast<int64_t>(rc.inline_threshold);

        if (static_cast<int>(op.targets.size()) > rc.max_task_fanout) {
          // Too wide to serialize here: persist the source and let the
          // proxy invoke every edge. This executor contributes nothing
          // further to the run.
          ensure_stored(src);
          rc.log.append(ctx.now_ns(), EventKind::Fanout, ctx.instance(), ctx.request_id(),
                        {{"fanout", op.id},
                         {"degree", op.targets.size()},
                         {"mode", "delegated"}});
          FanOutRequest fr;
          fr.run_id = rc.run_id;
          fr.fanout_id = op.id;
          fr.source = src;
          fr.schedule_leaf = req.schedule_leaf;
          if (small) fr.inline_value = v;
          rc.sm.submit_fanout(ctx, std::move(fr));
          flush();
          return WalkEnd::DelegatedFanout;
        }

        // Keep one edge, enqueue the rest. Small values travel inline and
        // are only stored later if a fan-in needs them; big ones are stored
        // now and travel by key.
        const OpKey become = pick_become(op.targets);
        if (!small) ensure_stored(src);
        std::vector<InvocationRequest> spawns;
        spawns.reserve(op.targets.size() - 1);
        for (const OpKey& t : op.targets) {
          if (t == become) continue;
          spawns.push_back(StorageManager::edge_request(rc.run_id, req.schedule_leaf, op.id, t,
                                                        src, small ? v : nullptr,
                                                        small && stored.count(src) > 0));
        }
        rc.log.append(ctx.now_ns(), EventKind::Fanout, ctx.instance(), ctx.request_id(),
                      {{"fanout", op.id},
                       {"degree", op.targets.size()},
                       {"mode", "become"},
                       {"become", become}});
        rc.sm.submit_invocations(ctx, std::move(spawns));
        pos = become;
        break;
      }

      case ScheduleOpKind::FanIn: {
        if (arriving.empty())
          throw ProtocolViolation("fan-in " + op.id + " entered without an arriving edge");
        // Value first, then the registration: whoever completes the set can
        // rely on every registered edge's output already being readable.
        ensure_stored(arriving);
        rc.platform.enforce_connectivity(ctx.instance(), CommAction::KvOp);
        RegistrationResult res = rc.kv.register_dependency(ctx, rc.run_id, op.id, arriving);
        if (!res.completed_set) {
          flush();
          return WalkEnd::LostFanin;
        }
        if (!op.next)
          throw ProtocolViolation("fan-in " + op.id + " has no continuation");
        pos = *op.next;
        break;
      }
    }
  }
}

}  // namespace dagrun
