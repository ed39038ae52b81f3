#include "dagrun/engines.hpp"

#include <set>

#include "dagrun/errors.hpp"
#include "dagrun/executor.hpp"
#include "dagrun/hash.hpp"
#include "dagrun/schedule.hpp"
#include "dagrun/storage_manager.hpp"

namespace dagrun {

std::string engine_name(EngineKind k) {
  switch (k) {
    case EngineKind::Wukong: return "wukong";
    case EngineKind::Strawman: return "strawman";
    case EngineKind::PubSub: return "pubsub";
    case EngineKind::ParallelInvoker: return "parallel-invoker";
  }
  return "unknown";
}

std::optional<EngineKind> engine_from_name(const std::string& name) {
  if (name == "wukong") return EngineKind::Wukong;
  if (name == "strawman") return EngineKind::Strawman;
  if (name == "pubsub") return EngineKind::PubSub;
  if (name == "parallel-invoker") return EngineKind::ParallelInvoker;
  return std::nullopt;
}

const std::vector<std::string>& all_engine_names() {
  static const std::vector<std::string> names = {"wukong", "strawman", "pubsub",
                                                 "parallel-invoker"};
  return names;
}

namespace {

void run_decentralized(const TaskGraph& g, const OpRegistry& reg, const RunConfig& cfg,
                       SimClock& clock, KvStore& kv, Platform& platform, EventLog& log,
                       RunOutcome& out) {
  ScheduleSet schedules = generate_schedules(g);
  StorageManager sm(clock, log, kv, platform, schedules, out.run_id, std::max(1, cfg.num_invokers),
                    cfg.max_task_fanout, cfg.kv.base_latency_ms);
  RunContext rc{clock,       log,         kv,
                platform,    sm,          g,
                reg,         schedules,   out.run_id,
                cfg.max_task_fanout, cfg.inline_threshold};
  platform.set_handler(
      [&rc](FunctionContext& ctx, const InvocationRequest& r) { run_executor(rc, ctx, r); });

  auto finals = kv.subscribe("final/" + out.run_id);
  platform.set_error_sink([finals](const InvocationRequest&, const std::string& reason) {
    Message m;
    m.error = reason;
    finals->send(m);
  });

  std::vector<TaskId> leaves = g.leaves();
  std::vector<TaskId> sinks = g.sinks();

  clock.run("scheduler", [&] {
    ActorMeter meter(clock, "scheduler");
    kv.register_run(out.run_id, schedules);
    kv.put(meter, "schedules/" + out.run_id, make_value(Value{schedule_set_to_string(schedules)}));
    sm.start();

    // The scheduler's last act in the run: push every leaf through a small
    // launcher pool, then sit on the final channel. All other coordination
    // happens between executors and the store.
    size_t pool = std::min<size_t>(static_cast<size_t>(std::max(1, cfg.num_invokers)),
                                   std::max<size_t>(leaves.size(), 1));
    std::vector<std::vector<InvocationRequest>> batches(pool);
    for (size_t i = 0; i < leaves.size(); ++i) {
      const StaticSchedule& sched = schedules.for_leaf(leaves[i]);
      InvocationRequest r;
      r.request_id = "rq-" + hex16(fnv1a64("launch|" + out.run_id + "|" + leaves[i]));
      r.run_id = out.run_id;
      r.schedule_leaf = leaves[i];
      r.entry_key = sched.entry;
      batches[i % pool].push_back(std::move(r));
    }
    for (size_t w = 0; w < pool; ++w) {
      if (batches[w].empty()) continue;
      clock.spawn("launcher-" + std::to_string(w),
                  [&clock, &platform, w, batch = std::move(batches[w])]() mutable {
                    ActorMeter m(clock, "launcher-" + std::to_string(w));
                    for (InvocationRequest& r : batch) platform.invoke(std::move(r), m);
                  });
    }

    std::set<TaskId> want(sinks.begin(), sinks.end());
    while (!want.empty()) {
      auto msg = finals->recv();
      if (!msg) throw Error("final channel closed before the run finished");
      if (!msg->error.empty()) throw PermanentFailure(msg->error);
      if (want.erase(msg->task)) out.sink_values[msg->task] = msg->value;
    }
    sm.shutdown();
    finals->close();
  });
  out.proxy_invocations = sm.proxy_invocations();
}

void run_central(const TaskGraph& g, const OpRegistry& reg, const RunConfig& cfg, SimClock& clock,
                 KvStore& kv, Platform& platform, EventLog& log, RunOutcome& out) {
  const EngineKind kind = cfg.engine;
  auto out_key = [&out](const TaskId& t) { return KvStore::key("out", out.run_id, t); };

  // Strawman completions ride a direct connection into the scheduler; the
  // other two go through the store's pub/sub.
  auto done_ch = kind == EngineKind::Strawman ? std::make_shared<Channel<Message>>(clock)
                                              : kv.subscribe("done/" + out.run_id);
  auto finals = kv.subscribe("final/" + out.run_id);

  platform.set_handler([&g, &reg, &kv, &cfg, &out, &log, done_ch, kind, out_key](
                           FunctionContext& ctx, const InvocationRequest& r) {
    const TaskNode& node = g.node(r.task);
    int64_t start_ns = ctx.now_ns();
    log.append(start_ns, EventKind::TaskStart, ctx.instance(), ctx.request_id(),
               {{"task", r.task}});
    std::vector<Value> args;
    args.reserve(node.deps.size() + node.inline_args.size());
    for (const TaskId& dep : node.deps) {
      auto v = kv.get(ctx, out_key(dep));
      if (!v) throw ProtocolViolation("input " + dep + " of " + r.task + " not stored");
      args.push_back(**v);
    }
    for (const Value& a : node.inline_args) args.push_back(a);
    double delay = op_delay_ms(node.op);
    if (delay > 0) ctx.charge_ms(delay, Phase::Compute);
    ValuePtr vp = make_value(apply_op(node.op, args, reg, r.task));
    kv.put(ctx, out_key(r.task), vp);
    if (g.out_edges(r.task).empty()) kv.store_final(ctx, out.run_id, r.task, vp);
    log.append(ctx.now_ns(), EventKind::TaskEnd, ctx.instance(), ctx.request_id(),
               {{"task", r.task},
                {"read_ms", ctx.phase_ms(Phase::Read)},
                {"compute_ms", ctx.phase_ms(Phase::Compute)},
                {"write_ms", ctx.phase_ms(Phase::Write)},
                {"invoke_delay_ms",
                 static_cast<double>(start_ns - ctx.invoked_at_ns()) / 1e6}});
    Message done;
    done.task = r.task;
    if (kind == EngineKind::Strawman) {
      ctx.charge_ms(cfg.tcp_notify_ms, Phase::Other);
      log.append(ctx.now_ns(), EventKind::TcpNotify, ctx.instance(), ctx.request_id(),
                 {{"task", r.task}});
      done_ch->send(done);
    } else {
      kv.publish(ctx, "done/" + out.run_id, done);
    }
  });

  platform.set_error_sink([done_ch](const InvocationRequest& r, const std::string& reason) {
    Message m;
    m.error = reason + " (task " + r.task + ")";
    done_ch->send(m);
  });

  std::vector<std::shared_ptr<Channel<InvocationRequest>>> pool;
  if (kind == EngineKind::ParallelInvoker)
    for (int i = 0; i < std::max(1, cfg.num_invokers); ++i)
      pool.push_back(std::make_shared<Channel<InvocationRequest>>(clock));

  clock.run("scheduler", [&] {
    ActorMeter meter(clock, "scheduler");
    for (size_t i = 0; i < pool.size(); ++i)
      clock.spawn("invoker-" + std::to_string(i), [&clock, &platform, q = pool[i], i] {
        ActorMeter m(clock, "invoker-" + std::to_string(i));
        while (auto r = q->recv()) platform.invoke(std::move(*r), m);
      });

    std::map<TaskId, size_t> waiting;
    for (const auto& [id, node] : g.nodes()) waiting[id] = node.deps.size();
    size_t rr = 0;
    auto dispatch = [&](const TaskId& t) {
      InvocationRequest r;
      r.request_id = "rq-" + hex16(fnv1a64("task|" + out.run_id + "|" + t));
      r.run_id = out.run_id;
      r.task = t;
      if (kind == EngineKind::ParallelInvoker)
        pool[rr++ % pool.size()]->send(std::move(r));
      else
        platform.invoke(std::move(r), meter);  // dispatch overhead lands on the scheduler
    };

    for (const TaskId& leaf : g.leaves()) dispatch(leaf);

    std::set<TaskId> completed;
    while (completed.size() < g.task_count()) {
      auto msg = done_ch->recv();
      if (!msg) throw Error("completion channel closed before the run finished");
      if (!msg->error.empty()) throw PermanentFailure(msg->error);
      if (kind == EngineKind::Strawman) meter.charge_ms(cfg.tcp_notify_ms, Phase::Other);
      meter.charge_ms(cfg.sched_proc_ms, Phase::Other);
      // A replayed attempt can announce the same task twice; the dependency
      // bookkeeping must only move once.
      if (!completed.insert(msg->task).second) continue;
      for (const TaskId& succ : g.out_edges(msg->task))
        if (--waiting[succ] == 0) dispatch(succ);
    }

    std::vector<TaskId> sinks = g.sinks();
    std::set<TaskId> want(sinks.begin(), sinks.end());
    while (!want.empty()) {
      auto msg = finals->recv();
      if (!msg) throw Error("final channel closed before results arrived");
      if (!msg->error.empty()) throw PermanentFailure(msg->error);
      if (want.erase(msg->task)) out.sink_values[msg->task] = msg->value;
    }
    for (auto& q : pool) q->close();
    done_ch->close();
    finals->close();
  });
}

}  // namespace

RunOutcome execute_run(const TaskGraph& g, const OpRegistry& reg, const RunConfig& cfg,
                       EventLog& log) {
  if (!g.validated()) throw Error("graph must be validated before running");
  log.clear();
  RunOutcome out;
  out.run_id = "r" + hex16(splitmix64(cfg.seed));

  SimClock clock(cfg.clock_mode);
  KvStore kv(clock, log, cfg.kv);
  PlatformConfig pcfg = cfg.platform;
  if (pcfg.fault_seed == 0) pcfg.fault_seed = cfg.seed;
  Platform platform(clock, log, pcfg);
  platform.warm_up(pcfg.warm_pool_size);

  try {
    if (cfg.engine == EngineKind::Wukong)
      run_decentralized(g, reg, cfg, clock, kv, platform, log, out);
    else
      run_central(g, reg, cfg, clock, kv, platform, log, out);
    out.ok = true;
  } catch (const PermanentFailure& e) {
    out.error = std::string("permanent failure: ") + e.what();
  } catch (const PlatformRejected& e) {
    out.error = std::string("platform rejected: ") + e.what();
  }
  out.kv_stats = kv.stats();
  out.max_distinct_fanin_winners = kv.max_distinct_winners();
  return out;
}

}  // namespace dagrun
