#include "dagrun/event_log.hpp"

namespace dagrun {

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::Invoke: return "invoke";
    case EventKind::ColdStart: return "cold_start";
    case EventKind::TaskStart: return "task_start";
    case EventKind::TaskEnd: return "task_end";
    case EventKind::KvRead: return "kv_read";
    case EventKind::KvWrite: return "kv_write";
    case EventKind::FaninRegister: return "fanin_register";
    case EventKind::Fanout: return "fanout";
    case EventKind::Publish: return "publish";
    case EventKind::Retry: return "retry";
    case EventKind::Timeout: return "timeout";
    case EventKind::Done: return "done";
    case EventKind::TcpNotify: return "tcp_notify";
  }
  return "?";
}

void EventLog::append(int64_t t_ns, EventKind kind, std::string instance, std::string request,
                      nlohmann::json detail) {
  std::lock_guard<std::mutex> lk(mu_);
  counts_[static_cast<size_t>(kind)]++;
  events_.push_back(Event{t_ns, kind, std::move(instance), std::move(request), std::move(detail)});
}

std::vector<Event> EventLog::snapshot() const {
  std::lock_guard<std::mutex> lk(mu_);
  return events_;
}

size_t EventLog::count(EventKind k) const {
  std::lock_guard<std::mutex> lk(mu_);
  return counts_[static_cast<size_t>(k)];
}

size_t EventLog::size() const {
  std::lock_guard<std::mutex> lk(mu_);
  return events_.size();
}

void EventLog::clear() {
  std::lock_guard<std::mutex> lk(mu_);
  events_.clear();
  counts_.fill(0);
}

nlohmann::json event_to_json(const Event& e) {
  nlohmann::json j;
  j["t_ms"] = static_cast<double>(e.t_ns) / 1e6;
  j["kind"] = event_kind_name(e.kind);
  j["instance"] = e.instance;
  j["request"] = e.request;
  j["detail"] = e.detail;
  return j;
}

nlohmann::json EventLog::to_json() const {
  auto events = snapshot();
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : events) arr.push_back(event_to_json(e));
  return arr;
}

std::string EventLog::to_jsonl() const {
  auto events = snapshot();
  std::string out;
  for (const auto& e : events) {
    out += event_to_json(e).dump();
    out += '\n';
  }
  return out;
}

}  // namespace dagrun
