#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dagrun/task_graph.hpp"

namespace dagrun {

// Binary tree reduction over n inputs (n a power of two >= 2): n/2 leaves,
// each a sleep_add over an input pair, then log2(n)-1 levels of degree-2
// fan-in sleep_adds; n-1 tasks total. Inputs default to [1..n].
TaskGraph tree_reduction(int64_t n, double delay_ms,
                         std::optional<std::vector<int64_t>> inputs = std::nullopt);

struct GemmWorkload {
  TaskGraph graph;
  Matrix a;  // dense inputs, kept for oracle comparison
  Matrix b;
};

// Blocked n x n matrix multiply with block x block tiles (block divides n).
// Leaves are const tiles of A and B; each tile fans out to n/block product
// tasks; per-output-tile sum tasks fan in n/block products. Dense inputs are
// filled from `seed` (uniform [0,1)).
GemmWorkload blocked_gemm(int64_t n, int64_t block, uint64_t seed);

// Seeded random DAG: up to max_nodes tasks, in-degree <= max_degree, leaves
// are const ints, internal nodes are n-ary sums. Always validates.
TaskGraph random_dag(uint64_t seed, int max_nodes, int max_degree);

}  // namespace dagrun
