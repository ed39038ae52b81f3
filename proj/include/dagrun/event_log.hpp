#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace dagrun {

enum class EventKind {
  Invoke,
  ColdStart,
  TaskStart,
  TaskEnd,
  KvRead,
  KvWrite,
  FaninRegister,
  Fanout,
  Publish,
  Retry,
  Timeout,
  Done,
  TcpNotify,
};

inline constexpr size_t kEventKindCount = 13;

const char* event_kind_name(EventKind k);

struct Event {
  int64_t t_ns = 0;
  EventKind kind = EventKind::Invoke;
  std::string instance;   // process that emitted it
  std::string request;    // invocation request, empty outside one
  nlohmann::json detail;  // kind-specific payload
};

// Append-only run trace; every metric in a report is derived from it. Under
// the virtual clock appends happen in a deterministic global order, so the
// serialized log is byte-stable (acceptance lever for reproducibility).
class EventLog {
 public:
  void append(int64_t t_ns, EventKind kind, std::string instance, std::string request,
              nlohmann::json detail = nlohmann::json::object());

  std::vector<Event> snapshot() const;
  size_t count(EventKind k) const;
  size_t size() const;
  void clear();

  nlohmann::json to_json() const;  // array of {t_ms, kind, instance, request, detail}
  std::string to_jsonl() const;    // one compact object per line

 private:
  mutable std::mutex mu_;
  std::vector<Event> events_;
  std::array<size_t, kEventKindCount> counts_{};
};

nlohmann::json event_to_json(const Event& e);

}  // namespace dagrun
