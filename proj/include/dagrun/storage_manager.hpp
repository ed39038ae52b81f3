#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "dagrun/channel.hpp"
#include "dagrun/kv_store.hpp"
#include "dagrun/platform.hpp"

namespace dagrun {

// A fan-out too wide for the executor to handle itself. The executor has
// already written the source output to the store; inline_value additionally
// carries it by copy when it is small enough, saving the receivers a read.
struct FanOutRequest {
  std::string run_id;
  std::string fanout_id;
  TaskId source;
  TaskId schedule_leaf;
  ValuePtr inline_value;
};

// Sits next to the KV store and absorbs invocation work executors should not
// serialize on: a proxy actor that expands delegated wide fan-outs, and a
// pool of invoker workers that carry the per-call dispatch overhead in
// parallel. Executors pay one message's latency to hand work over.
class StorageManager {
 public:
  StorageManager(SimClock& clock, EventLog& log, KvStore& kv, Platform& platform,
                 const ScheduleSet& schedules, std::string run_id, int num_invokers,
                 int max_task_fanout, double handoff_ms);

  void start();
  // Closes the queues; workers drain what is already enqueued and exit.
  void shutdown();

  // Narrow fan-out assist: the executor keeps one edge and enqueues the
  // rest. Requests fan over the worker pool round-robin.
  void submit_invocations(LatencyMeter& caller, std::vector<InvocationRequest> reqs);

  // Wide fan-out delegation: the proxy invokes every out-edge, including the
  // one the executor would otherwise have become. Rejects fan-outs at or
  // under the width threshold; those are the executor's job.
  void submit_fanout(LatencyMeter& caller, FanOutRequest r);

  size_t proxy_invocations() const;

  // Builds the invocation for one fan-out edge. Shared by executors and the
  // proxy so a given edge gets the same request id wherever it is spawned
  // from.
  static InvocationRequest edge_request(const std::string& run_id, const TaskId& schedule_leaf,
                                        const std::string& fanout_id, const OpKey& target_key,
                                        const TaskId& source, ValuePtr inline_value, bool in_kv);

 private:
  void proxy_main();
  void invoker_main(size_t idx);
  void dispatch_round_robin(std::vector<InvocationRequest> reqs);

  SimClock& clock_;
  EventLog& log_;
  KvStore& kv_;
  Platform& platform_;
  const ScheduleSet& schedules_;
  std::string run_id_;
  int max_task_fanout_;
  double handoff_ms_;

  std::unique_ptr<Channel<FanOutRequest>> proxy_q_;
  std::vector<std::unique_ptr<Channel<InvocationRequest>>> worker_qs_;

  mutable std::mutex mu_;
  size_t proxy_invocations_ = 0;
  bool started_ = false;
};

}  // namespace dagrun
