#include "dagrun/task_graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "dagrun/errors.hpp"

namespace dagrun {

CycleDetected::CycleDetected(std::vector<std::string> cycle_path)
    : Error([&] {
        std::string s = "dependency cycle:";
        for (const auto& t : cycle_path) s += " " + t;
        return s;
      }()),
      cycle(std::move(cycle_path)) {}

void TaskGraph::add_task(TaskNode node) {
  if (nodes_.count(node.id)) throw DuplicateId(node.id);
  if (node.id.empty()) throw SchemaViolation("task id must be non-empty");
  std::set<TaskId> seen;
  for (const auto& d : node.deps)
    if (!seen.insert(d).second)
      throw SchemaViolation("task " + node.id + " lists dependency " + d + " twice");
  if (!node.deps.empty() && !node.inline_args.empty())
    throw SchemaViolation("task " + node.id + " has args but is not a leaf");
  validated_ = false;
  nodes_.emplace(node.id, std::move(node));
}

void TaskGraph::validate() {
  out_edges_.clear();
  for (const auto& [id, n] : nodes_) out_edges_[id];  // ensure key exists
  for (const auto& [id, n] : nodes_) {
    for (const auto& d : n.deps) {
      if (!nodes_.count(d)) throw UnknownDependency(id, d);
      out_edges_[d].push_back(id);
    }
  }
  for (auto& [id, outs] : out_edges_) std::sort(outs.begin(), outs.end());

  // Iterative DFS with color marks; on a back edge, report the cycle rotated
  // to start at its lexicographically smallest member.
  enum class Color { White, Grey, Black };
  std::map<TaskId, Color> color;
  for (const auto& [id, n] : nodes_) color[id] = Color::White;
  std::vector<TaskId> path;
  struct Frame {
    TaskId id;
    size_t next = 0;
  };
  for (const auto& [root, n] : nodes_) {
    if (color[root] != Color::White) continue;
    std::vector<Frame> stack{{root}};
    color[root] = Color::Grey;
    path.push_back(root);
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto& outs = out_edges_.at(f.id);
      if (f.next < outs.size()) {
        const TaskId& next = outs[f.next++];
        if (color[next] == Color::Grey) {
          auto it = std::find(path.begin(), path.end(), next);
          std::vector<TaskId> cyc(it, path.end());
          auto smallest = std::min_element(cyc.begin(), cyc.end());
          std::rotate(cyc.begin(), smallest, cyc.end());
          throw CycleDetected(cyc);
        }
        if (color[next] == Color::White) {
          color[next] = Color::Grey;
          path.push_back(next);
          stack.push_back({next});
        }
      } else {
        color[f.id] = Color::Black;
        path.pop_back();
        stack.pop_back();
      }
    }
  }
  validated_ = true;
}

const TaskNode& TaskGraph::node(const TaskId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error("no such task: " + id);
  return it->second;
}

std::vector<TaskId> TaskGraph::leaves() const {
  std::vector<TaskId> out;
  for (const auto& [id, n] : nodes_)
    if (n.deps.empty()) out.push_back(id);
  return out;  // map iteration is already sorted
}

std::vector<TaskId> TaskGraph::sinks() const {
  std::vector<TaskId> out;
  for (const auto& [id, n] : nodes_)
    if (out_edges_.at(id).empty()) out.push_back(id);
  return out;
}

const std::vector<TaskId>& TaskGraph::out_edges(const TaskId& id) const {
  auto it = out_edges_.find(id);
  if (it == out_edges_.end()) throw Error("no such task: " + id);
  return it->second;
}

std::vector<TaskId> TaskGraph::topo_order() const {
  std::map<TaskId, size_t> indeg;
  for (const auto& [id, n] : nodes_) indeg[id] = n.deps.size();
  // std::set gives the lexicographically smallest ready task first.
  std::set<TaskId> ready;
  for (const auto& [id, d] : indeg)
    if (d == 0) ready.insert(id);
  std::vector<TaskId> order;
  while (!ready.empty()) {
    TaskId t = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(t);
    for (const auto& s : out_edges_.at(t))
      if (--indeg[s] == 0) ready.insert(s);
  }
  if (order.size() != nodes_.size()) throw Error("topo_order on cyclic graph");
  return order;
}

bool TaskGraph::structurally_equal(const TaskGraph& o) const {
  if (nodes_.size() != o.nodes_.size()) return false;
  for (const auto& [id, n] : nodes_) {
    auto it = o.nodes_.find(id);
    if (it == o.nodes_.end()) return false;
    const TaskNode& m = it->second;
    if (!(n.op == m.op) || n.deps != m.deps) return false;
    if (n.inline_args.size() != m.inline_args.size()) return false;
    for (size_t i = 0; i < n.inline_args.size(); ++i)
      if (!value_equal(n.inline_args[i], m.inline_args[i])) return false;
  }
  return true;
}

OracleResult evaluate_sequential(const TaskGraph& g, const OpRegistry& reg) {
  if (!g.validated()) throw Error("evaluate_sequential requires a validated graph");
  OracleResult r;
  for (const auto& t : g.topo_order()) {
    const TaskNode& n = g.node(t);
    std::vector<Value> args;
    if (n.deps.empty()) {
      args = n.inline_args;
    } else {
      args.reserve(n.deps.size());
      for (const auto& d : n.deps) args.push_back(r.values.at(d));
    }
    r.values[t] = apply_op(n.op, args, reg, t);
  }
  for (const auto& s : g.sinks()) r.sink_values[s] = r.values.at(s);
  return r;
}

namespace {

void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) ok = true;
    if (!ok) throw SchemaViolation("unknown field '" + it.key() + "' in " + where);
  }
}

}  // namespace

TaskGraph load_dag(std::istream& in, const OpRegistry& reg) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!doc.is_object()) throw SchemaViolation("top level must be an object");
  reject_unknown_keys(doc, {"version", "nodes"}, "document");
  if (!doc.contains("version") || doc.at("version") != 1)
    throw SchemaViolation("missing or unsupported version (expected 1)");
  if (!doc.contains("nodes") || !doc.at("nodes").is_array())
    throw SchemaViolation("nodes must be an array");

  TaskGraph g;
  for (const auto& jn : doc.at("nodes")) {
    if (!jn.is_object()) throw SchemaViolation("node entries must be objects");
    reject_unknown_keys(jn, {"id", "op", "params", "deps", "args"}, "node");
    if (!jn.contains("id") || !jn.at("id").is_string())
      throw SchemaViolation("node requires a string id");
    if (!jn.contains("op") || !jn.at("op").is_string())
      throw SchemaViolation("node requires a string op");
    TaskNode n;
    n.id = jn.at("id").get<std::string>();
    nlohmann::json params = jn.contains("params") ? jn.at("params") : nlohmann::json::object();
    n.op = op_from_json(jn.at("op").get<std::string>(), params);
    if (n.op.kind == OpKind::Custom && !reg.has(n.op.custom_name))
      throw SchemaViolation("node " + n.id + " uses unregistered custom op " + n.op.custom_name);
    if (jn.contains("deps")) {
      if (!jn.at("deps").is_array()) throw SchemaViolation("deps must be an array");
      for (const auto& d : jn.at("deps")) {
        if (!d.is_string()) throw SchemaViolation("deps entries must be strings");
        n.deps.push_back(d.get<std::string>());
      }
    }
    if (jn.contains("args")) {
      if (!jn.at("args").is_array()) throw SchemaViolation("args must be an array");
      if (!n.deps.empty())
        throw SchemaViolation("node " + n.id + " has args but is not a leaf");
      for (const auto& a : jn.at("args")) n.inline_args.push_back(value_from_json(a));
    }
    g.add_task(std::move(n));
  }
  g.validate();
  return g;
}

TaskGraph load_dag_file(const std::string& path, const OpRegistry& reg) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open DAG file: " + path);
  return load_dag(f, reg);
}

nlohmann::json dag_to_json(const TaskGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [id, n] : g.nodes()) {
    nlohmann::json jn;
    jn["id"] = id;
    jn["op"] = op_kind_name(n.op.kind);
    nlohmann::json params = op_params_to_json(n.op);
    if (!params.empty()) jn["params"] = params;
    jn["deps"] = n.deps;
    if (!n.inline_args.empty()) {
      nlohmann::json args = nlohmann::json::array();
      for (const auto& a : n.inline_args) args.push_back(value_to_json(a));
      jn["args"] = args;
    }
    nodes.push_back(jn);
  }
  return nlohmann::json{{"version", 1}, {"nodes", nodes}};
}

void save_dag_file(const TaskGraph& g, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write DAG file: " + path);
  f << dag_to_json(g).dump(2) << "\n";
}

}  // namespace dagrun
