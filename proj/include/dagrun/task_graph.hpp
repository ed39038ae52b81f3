#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dagrun/ops.hpp"

namespace dagrun {

using TaskId = std::string;

struct TaskNode {
  TaskId id;
  OpSpec op;
  std::vector<TaskId> deps;         // input order; arguments resolve in this order
  std::vector<Value> inline_args;   // literal inputs, only legal on leaves
};

// Immutable-after-validate DAG of tasks. Out-edges are kept sorted so every
// traversal (schedule generation, evaluation tie-breaks) is deterministic.
class TaskGraph {
 public:
  void add_task(TaskNode node);  // throws DuplicateId, SchemaViolation (dup deps)

  // Checks deps exist and the graph is acyclic; computes sorted out-edges.
  // Throws UnknownDependency or CycleDetected.
  void validate();
  bool validated() const { return validated_; }

  size_t task_count() const { return nodes_.size(); }
  bool has(const TaskId& id) const { return nodes_.count(id) > 0; }
  const TaskNode& node(const TaskId& id) const;
  const std::map<TaskId, TaskNode>& nodes() const { return nodes_; }

  // Sorted lists; require validate() first.
  std::vector<TaskId> leaves() const;  // zero in-degree
  std::vector<TaskId> sinks() const;   // zero out-degree
  const std::vector<TaskId>& out_edges(const TaskId& id) const;
  size_t in_degree(const TaskId& id) const { return node(id).deps.size(); }

  // Deterministic topological order (Kahn, lexicographic tie-break).
  std::vector<TaskId> topo_order() const;

  bool structurally_equal(const TaskGraph& o) const;

 private:
  std::map<TaskId, TaskNode> nodes_;
  std::map<TaskId, std::vector<TaskId>> out_edges_;
  bool validated_ = false;
};

struct OracleResult {
  std::map<TaskId, Value> values;       // every task
  std::map<TaskId, Value> sink_values;  // sinks only
};

// Reference evaluator: single-threaded, no platform, no KV. Engines are
// checked against this for exact sink equality.
OracleResult evaluate_sequential(const TaskGraph& g, const OpRegistry& reg);

// DAG file format (JSON): {"version":1,"nodes":[{id,op,params?,deps,args?}]}.
// Unknown fields and unknown ops are rejected. `reg` is consulted so files
// naming unregistered custom ops fail at load time.
TaskGraph load_dag(std::istream& in, const OpRegistry& reg);
TaskGraph load_dag_file(const std::string& path, const OpRegistry& reg);
nlohmann::json dag_to_json(const TaskGraph& g);
void save_dag_file(const TaskGraph& g, const std::string& path);

}  // namespace dagrun
