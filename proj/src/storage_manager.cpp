#include "dagrun/storage_manager.hpp"

#include "dagrun/errors.hpp"
#include "dagrun/hash.hpp"

namespace dagrun {

StorageManager::StorageManager(SimClock& clock, EventLog& log, KvStore& kv, Platform& platform,
                               const ScheduleSet& schedules, std::string run_id, int num_invokers,
                               int max_task_fanout, double handoff_ms)
    : clock_(clock),
      log_(log),
      kv_(kv),
      platform_(platform),
      schedules_(schedules),
      run_id_(std::move(run_id)),
      max_task_fanout_(max_task_fanout),
      handoff_ms_(handoff_ms) {
  if (num_invokers < 1) throw Error("storage manager needs at least one invoker");
  proxy_q_ = std::make_unique<Channel<FanOutRequest>>(clock_);
  for (int i = 0; i < num_invokers; ++i)
    worker_qs_.push_back(std::make_unique<Channel<InvocationRequest>>(clock_));
}

void StorageManager::start() {
  if (started_) return;
  started_ = true;
  clock_.spawn("kv-proxy", [this] { proxy_main(); });
  for (size_t i = 0; i < worker_qs_.size(); ++i)
    clock_.spawn("sm-invoker-" + std::to_string(i), [this, i] { invoker_main(i); });
}

void StorageManager::shutdown() {
  proxy_q_->close();
  for (auto& q : worker_qs_) q->close();
}

void StorageManager::dispatch_round_robin(std::vector<InvocationRequest> reqs) {
  size_t w = worker_qs_.size();
  for (size_t j = 0; j < reqs.size(); ++j) worker_qs_[j % w]->send(std::move(reqs[j]));
}

void StorageManager::submit_invocations(LatencyMeter& caller, std::vector<InvocationRequest> reqs) {
  if (reqs.empty()) return;
  caller.charge_ms(handoff_ms_, Phase::Other);
  dispatch_round_robin(std::move(reqs));
}

void StorageManager::submit_fanout(LatencyMeter& caller, FanOutRequest r) {
  const StaticSchedule& sched = schedules_.for_leaf(r.schedule_leaf);
  auto it = sched.ops.find("fo:" + r.fanout_id);
  if (it == sched.ops.end())
    throw UnknownFanOut(r.fanout_id + " (schedule " + r.schedule_leaf + ")");
  if (static_cast<int>(it->second.targets.size()) <= max_task_fanout_)
    throw ProtocolViolation("fan-out " + r.fanout_id + " is under the delegation threshold");
  caller.charge_ms(handoff_ms_, Phase::Other);
  proxy_q_->send(std::move(r));
}

void StorageManager::proxy_main() {
  ActorMeter meter(clock_, "kv-proxy");
  while (auto r = proxy_q_->recv()) {
    // One record lookup to expand the fan-out, then every edge is invoked;
    // the delegating executor keeps none of them.
    meter.charge_ms(handoff_ms_, Phase::Other);
    const ScheduleOp& op = schedules_.for_leaf(r->schedule_leaf).op("fo:" + r->fanout_id);
    std::vector<InvocationRequest> reqs;
    reqs.reserve(op.targets.size());
    for (const OpKey& t : op.targets)
      reqs.push_back(edge_request(r->run_id, r->schedule_leaf, r->fanout_id, t, r->source,
                                  r->inline_value, true));
    {
      std::lock_guard<std::mutex> lk(mu_);
      proxy_invocations_ += reqs.size();
    }
    dispatch_round_robin(std::move(reqs));
  }
}

void StorageManager::invoker_main(size_t idx) {
  ActorMeter meter(clock_, "sm-invoker-" + std::to_string(idx));
  while (auto r = worker_qs_[idx]->recv()) platform_.invoke(std::move(*r), meter);
}

size_t StorageManager::proxy_invocations() const {
  std::lock_guard<std::mutex> lk(mu_);
  return proxy_invocations_;
}

InvocationRequest StorageManager::edge_request(const std::string& run_id,
                                               const TaskId& schedule_leaf,
                                               const std::string& fanout_id,
                                               const OpKey& target_key, const TaskId& source,
                                               ValuePtr inline_value, bool in_kv) {
  InvocationRequest r;
  r.request_id = "rq-" + hex16(fnv1a64("edge|" + run_id + "|" + fanout_id + "|" + target_key));
  r.run_id = run_id;
  r.schedule_leaf = schedule_leaf;
  r.entry_key = target_key;
  r.arrived_from = source;
  if (inline_value) {
    InputBinding b;
    b.task = source;
    b.value = std::move(inline_value);
    b.in_kv = in_kv;
    r.inline_inputs.push_back(std::move(b));
  }
  return r;
}

}  // namespace dagrun
