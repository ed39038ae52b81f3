#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dagrun/channel.hpp"
#include "dagrun/event_log.hpp"
#include "dagrun/meter.hpp"
#include "dagrun/schedule.hpp"

namespace dagrun {

struct KvConfig {
  int shards = 4;
  double base_latency_ms = 1.0;
  double per_kib_ms = 0.05;
};

struct KvStats {
  size_t reads = 0;
  size_t writes = 0;
  uint64_t bytes_read = 0;
  uint64_t bytes_written = 0;
  size_t fanin_registrations = 0;
  size_t publishes = 0;
};

// Pub/sub payload. Completion notifications carry just the task; final
// results carry the value; an error from the platform's permanent-failure
// sink carries a reason and aborts whoever is awaiting the run.
struct Message {
  TaskId task;
  ValuePtr value;
  std::string error;
};

struct RegistrationResult {
  int count_after = 0;
  bool completed_set = false;
};

// Sharded in-memory store with simulated latency. Every charged operation
// goes through the caller's LatencyMeter, so KV traffic from inside a
// function instance hits the same timeout/fault checkpoints as any other
// work. Keys follow `<namespace>/<run>/<qualifier>` with namespaces out,
// dep, schedules, final.
class KvStore {
 public:
  KvStore(SimClock& clock, EventLog& log, KvConfig cfg);

  static std::string key(const std::string& ns, const std::string& run,
                         const std::string& qualifier);

  int shard_count() const { return cfg_.shards; }
  int shard_for(const std::string& key) const;

  void put(LatencyMeter& m, const std::string& key, ValuePtr value);
  std::optional<ValuePtr> get(LatencyMeter& m, const std::string& key);

  // Installs the fan-in dependency records (in-degree and legal edge set)
  // for one run. Control-plane setup: uncharged.
  void register_run(const std::string& run_id, const ScheduleSet& schedules);

  // Atomic satisfied-edge insert for a fan-in. Idempotent per edge; the
  // count is the set size, so retried registrations never double-count.
  // completed_set is true for the call that fills the set, and for retried
  // registrations of that same winning edge (a crashed winner's replay must
  // be able to resume the continuation); every other duplicate gets false.
  RegistrationResult register_dependency(LatencyMeter& m, const std::string& run_id,
                                         const std::string& fanin_id, const TaskId& upstream);

  // Exactly-once FIFO delivery to subscribers registered before the publish;
  // later subscribers miss earlier messages by design.
  std::shared_ptr<Channel<Message>> subscribe(const std::string& channel);
  void publish(LatencyMeter& m, const std::string& channel, const Message& msg);

  // Sink output: written under final/<run>/<task> and relayed on the run's
  // "final/<run>" channel.
  void store_final(LatencyMeter& m, const std::string& run_id, const TaskId& task, ValuePtr value);

  KvStats stats() const;
  // Largest number of distinct edges that ever received completed_set=true
  // on one fan-in; > 1 would mean a fan-in fired twice.
  size_t max_distinct_winners() const;

 private:
  struct DepRecord {
    int in_degree = 0;
    std::set<TaskId> legal;
    std::set<TaskId> satisfied;
    TaskId completer;            // edge that filled the set, once known
    std::set<TaskId> winners;    // audit: edges that ever saw completed_set=true
  };

  struct Shard {
    std::mutex mu;
    std::map<std::string, ValuePtr> data;
    std::map<std::string, DepRecord> deps;
  };

  void charge(LatencyMeter& m, int64_t bytes, Phase p);

  SimClock& clock_;
  EventLog& log_;
  KvConfig cfg_;
  std::vector<std::unique_ptr<Shard>> shards_;

  std::mutex sub_mu_;
  std::map<std::string, std::vector<std::shared_ptr<Channel<Message>>>> subs_;

  mutable std::mutex stats_mu_;
  KvStats stats_;
};

}  // namespace dagrun
