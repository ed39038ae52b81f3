#include "dagrun/kv_store.hpp"

#include "dagrun/errors.hpp"
#include "dagrun/hash.hpp"

namespace dagrun {

KvStore::KvStore(SimClock& clock, EventLog& log, KvConfig cfg)
    : clock_(clock), log_(log), cfg_(cfg) {
  if (cfg_.shards < 1) throw Error("kv store needs at least one shard");
  shards_.reserve(static_cast<size_t>(cfg_.shards));
  for (int i = 0; i < cfg_.shards; ++i) shards_.push_back(std::make_unique<Shard>());
}

std::string KvStore::key(const std::string& ns, const std::string& run,
                         const std::string& qualifier) {
  return ns + "/" + run + "/" + qualifier;
}

int KvStore::shard_for(const std::string& key) const {
  return static_cast<int>(fnv1a64(key) % static_cast<uint64_t>(cfg_.shards));
}

void KvStore::charge(LatencyMeter& m, int64_t bytes, Phase p) {
  double ms = cfg_.base_latency_ms + cfg_.per_kib_ms * (static_cast<double>(bytes) / 1024.0);
  m.charge_ms(ms, p);
}

void KvStore::put(LatencyMeter& m, const std::string& key, ValuePtr value) {
  if (!value) throw Error("kv put of null value: " + key);
  int64_t bytes = value_bytes(*value);
  charge(m, bytes, Phase::Write);
  int shard = shard_for(key);
  {
    std::lock_guard<std::mutex> lk(shards_[static_cast<size_t>(shard)]->mu);
    shards_[static_cast<size_t>(shard)]->data[key] = std::move(value);
  }
  {
    std::lock_guard<std::mutex> lk(stats_mu_);
    stats_.writes++;
    stats_.bytes_written += static_cast<uint64_t>(bytes);
  }
  log_.append(clock_.now_ns(), EventKind::KvWrite, m.instance(), m.request_id(),
              {{"key", key}, {"bytes", bytes}, {"shard", shard}});
}

std::optional<ValuePtr> KvStore::get(LatencyMeter& m, const std::string& key) {
  int shard = shard_for(key);
  ValuePtr found;
  {
    std::lock_guard<std::mutex> lk(shards_[static_cast<size_t>(shard)]->mu);
    auto it = shards_[static_cast<size_t>(shard)]->data.find(key);
    if (it != shards_[static_cast<size_t>(shard)]->data.end()) found = it->second;
  }
  int64_t bytes = found ? value_bytes(*found) : 0;
  charge(m, bytes, Phase::Read);
  {
    std::lock_guard<std::mutex> lk(stats_mu_);
    stats_.reads++;
    stats_.bytes_read += static_cast<uint64_t>(bytes);
  }
  log_.append(clock_.now_ns(), EventKind::KvRead, m.instance(), m.request_id(),
              {{"key", key}, {"bytes", bytes}, {"shard", shard}, {"found", found != nullptr}});
  if (!found) return std::nullopt;
  return found;
}

void KvStore::register_run(const std::string& run_id, const ScheduleSet& schedules) {
  for (const auto& [fanin, degree] : schedules.fanin_degrees) {
    std::string k = key("dep", run_id, fanin);
    DepRecord rec;
    rec.in_degree = degree;
    rec.legal = schedules.fanin_edges.at(fanin);
    int shard = shard_for(k);
    std::lock_guard<std::mutex> lk(shards_[static_cast<size_t>(shard)]->mu);
    shards_[static_cast<size_t>(shard)]->deps.emplace(std::move(k), std::move(rec));
  }
}

RegistrationResult KvStore::register_dependency(LatencyMeter& m, const std::string& run_id,
                                                const std::string& fanin_id,
                                                const TaskId& upstream) {
  std::string k = key("dep", run_id, fanin_id);
  charge(m, static_cast<int64_t>(upstream.size()), Phase::Write);
  int shard = shard_for(k);
  RegistrationResult res;
  int degree = 0;
  {
    std::lock_guard<std::mutex> lk(shards_[static_cast<size_t>(shard)]->mu);
    auto it = shards_[static_cast<size_t>(shard)]->deps.find(k);
    if (it == shards_[static_cast<size_t>(shard)]->deps.end())
      throw UnknownFanIn(fanin_id + " (run " + run_id + ")");
    DepRecord& rec = it->second;
    if (!rec.legal.count(upstream)) throw IllegalEdge(fanin_id, upstream);
    rec.satisfied.insert(upstream);
    degree = rec.in_degree;
    res.count_after = static_cast<int>(rec.satisfied.size());
    if (res.count_after == rec.in_degree) {
      if (rec.completer.empty()) rec.completer = upstream;
      // Only the edge that originally completed the set may resume the
      // continuation; its own retries replay the win, everyone else loses.
      res.completed_set = (rec.completer == upstream);
      if (res.completed_set) rec.winners.insert(upstream);
    }
  }
  {
    std::lock_guard<std::mutex> lk(stats_mu_);
    stats_.fanin_registrations++;
  }
  log_.append(clock_.now_ns(), EventKind::FaninRegister, m.instance(), m.request_id(),
              {{"fanin", fanin_id},
               {"edge", upstream},
               {"count", res.count_after},
               {"degree", degree},
               {"completed", res.completed_set}});
  return res;
}

std::shared_ptr<Channel<Message>> KvStore::subscribe(const std::string& channel) {
  auto ch = std::make_shared<Channel<Message>>(clock_);
  std::lock_guard<std::mutex> lk(sub_mu_);
  subs_[channel].push_back(ch);
  return ch;
}

void KvStore::publish(LatencyMeter& m, const std::string& channel, const Message& msg) {
  int64_t bytes = msg.value ? value_bytes(*msg.value) : static_cast<int64_t>(msg.task.size());
  charge(m, bytes, Phase::Write);
  std::vector<std::shared_ptr<Channel<Message>>> targets;
  {
    std::lock_guard<std::mutex> lk(sub_mu_);
    auto it = subs_.find(channel);
    if (it != subs_.end()) targets = it->second;
  }
  for (auto& ch : targets) ch->send(msg);
  {
    std::lock_guard<std::mutex> lk(stats_mu_);
    stats_.publishes++;
  }
  log_.append(clock_.now_ns(), EventKind::Publish, m.instance(), m.request_id(),
              {{"channel", channel},
               {"task", msg.task},
               {"subscribers", targets.size()}});
}

void KvStore::store_final(LatencyMeter& m, const std::string& run_id, const TaskId& task,
                          ValuePtr value) {
  put(m, key("final", run_id, task), value);
  Message msg;
  msg.task = task;
  msg.value = std::move(value);
  publish(m, "final/" + run_id, msg);
}

KvStats KvStore::stats() const {
  std::lock_guard<std::mutex> lk(stats_mu_);
  return stats_;
}

size_t KvStore::max_distinct_winners() const {
  size_t best = 0;
  for (const auto& shard : shards_) {
    std::lock_guard<std::mutex> lk(shard->mu);
    for (const auto& [k, rec] : shard->deps) {
      (void)k;
      best = std::max(best, rec.winners.size());
    }
  }
  return best;
}

}  // namespace dagrun
