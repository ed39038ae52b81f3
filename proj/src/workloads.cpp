#include "dagrun/workloads.hpp"

#include <algorithm>
#include <cstdio>

#include "dagrun/errors.hpp"
#include "dagrun/hash.hpp"

namespace dagrun {

namespace {

std::string fmt_id(const char* pattern, long a, long b = 0, long c = 0) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

double unit_double(uint64_t seed, uint64_t index) {
  // 53 random bits -> [0,1); stable across platforms, unlike std distributions.
  return static_cast<double>(splitmix64(seed ^ splitmix64(index)) >> 11) * 0x1.0p-53;
}

}  // namespace

TaskGraph tree_reduction(int64_t n, double delay_ms, std::optional<std::vector<int64_t>> inputs) {
  if (n < 2 || (n & (n - 1)) != 0) throw NotPowerOfTwo(n);
  std::vector<int64_t> vals;
  if (inputs) {
    if (static_cast<int64_t>(inputs->size()) != n)
      throw Error("tree_reduction expects exactly n inputs");
    vals = *inputs;
  } else {
    vals.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) vals[static_cast<size_t>(i)] = i + 1;
  }

  TaskGraph g;
  OpSpec op;
  op.kind = OpKind::SleepAdd;
  op.delay_ms = delay_ms;

  int levels = 0;
  for (int64_t w = n; w > 1; w /= 2) ++levels;  // log2(n), >= 1

  int64_t width = n / 2;  // tasks at level 0
  for (int64_t i = 0; i < width; ++i) {
    TaskNode t;
    t.id = fmt_id("t%02ld_%04ld", 0, i);
    t.op = op;
    t.inline_args = {vals[static_cast<size_t>(2 * i)], vals[static_cast<size_t>(2 * i + 1)]};
    g.add_task(std::move(t));
  }
  for (int level = 1; level < levels; ++level) {
    width /= 2;
    for (int64_t i = 0; i < width; ++i) {
      TaskNode t;
      t.id = fmt_id("t%02ld_%04ld", level, i);
      t.op = op;
      t.deps = {fmt_id("t%02ld_%04ld", level - 1, 2 * i),
                fmt_id("t%02ld_%04ld", level - 1, 2 * i + 1)};
      g.add_task(std::move(t));
    }
  }
  g.validate();
  return g;
}

GemmWorkload blocked_gemm(int64_t n, int64_t block, uint64_t seed) {
  if (n < 1 || block < 1 || n % block != 0) throw IndivisibleBlock(n, block);
  const int64_t grid = n / block;

  GemmWorkload w;
  w.a = Matrix(static_cast<size_t>(n), static_cast<size_t>(n));
  w.b = Matrix(static_cast<size_t>(n), static_cast<size_t>(n));
  for (size_t i = 0; i < w.a.data.size(); ++i) {
    w.a.data[i] = unit_double(seed, i);
    w.b.data[i] = unit_double(seed + 0x9e37, i);
  }

  auto tile = [&](const Matrix& m, int64_t bi, int64_t bj) {
    Matrix t(static_cast<size_t>(block), static_cast<size_t>(block));
    for (int64_t r = 0; r < block; ++r)
      for (int64_t c = 0; c < block; ++c)
        t.at(static_cast<size_t>(r), static_cast<size_t>(c)) =
            m.at(static_cast<size_t>(bi * block + r), static_cast<size_t>(bj * block + c));
    return t;
  };

  TaskGraph& g = w.graph;
  for (int64_t i = 0; i < grid; ++i) {
    for (int64_t k = 0; k < grid; ++k) {
      TaskNode ta;
      ta.id = fmt_id("A_%02ld_%02ld", i, k);
      ta.op.kind = OpKind::Const;
      ta.op.const_value = tile(w.a, i, k);
      g.add_task(std::move(ta));
      TaskNode tb;
      tb.id = fmt_id("B_%02ld_%02ld", i, k);
      tb.op.kind = OpKind::Const;
      tb.op.const_value = tile(w.b, i, k);
      g.add_task(std::move(tb));
    }
  }
  for (int64_t i = 0; i < grid; ++i)
    for (int64_t j = 0; j < grid; ++j)
      for (int64_t k = 0; k < grid; ++k) {
        TaskNode p;
        p.id = fmt_id("P_%02ld_%02ld_%02ld", i, j, k);
        p.op.kind = OpKind::MatmulBlock;
        p.op.block_rows = static_cast<size_t>(block);
        p.op.block_cols = static_cast<size_t>(block);
        p.deps = {fmt_id("A_%02ld_%02ld", i, k), fmt_id("B_%02ld_%02ld", k, j)};
        g.add_task(std::move(p));
      }
  for (int64_t i = 0; i < grid; ++i)
    for (int64_t j = 0; j < grid; ++j) {
      TaskNode s;
      s.id = fmt_id("C_%02ld_%02ld", i, j);
      s.op.kind = OpKind::Sum;
      for (int64_t k = 0; k < grid; ++k) s.deps.push_back(fmt_id("P_%02ld_%02ld_%02ld", i, j, k));
      g.add_task(std::move(s));
    }
  g.validate();
  return w;
}

TaskGraph random_dag(uint64_t seed, int max_nodes, int max_degree) {
  if (max_nodes < 1) throw Error("random_dag needs max_nodes >= 1");
  if (max_degree < 1) throw Error("random_dag needs max_degree >= 1");
  uint64_t state = splitmix64(seed);
  auto next = [&]() {
    state = splitmix64(state);
    return state;
  };
  auto next_in = [&](uint64_t n) { return next() % n; };  // bias negligible here

  int count = 1 + static_cast<int>(next_in(static_cast<uint64_t>(max_nodes)));
  TaskGraph g;
  for (int i = 0; i < count; ++i) {
    TaskNode t;
    t.id = fmt_id("n%03ld", i);
    // First node is always a leaf; later nodes are leaves ~1/4 of the time.
    bool leaf = (i == 0) || next_in(4) == 0;
    if (leaf) {
      t.op.kind = OpKind::Const;
      t.op.const_value = static_cast<int64_t>(next_in(1000));
    } else {
      t.op.kind = OpKind::Sum;
      uint64_t limit = std::min<uint64_t>(static_cast<uint64_t>(max_degree),
                                          static_cast<uint64_t>(i));
      int degree = 1 + static_cast<int>(next_in(limit));
      std::vector<int> picked;
      while (static_cast<int>(picked.size()) < degree) {
        int cand = static_cast<int>(next_in(static_cast<uint64_t>(i)));
        bool dup = false;
        for (int p : picked) dup |= (p == cand);
        if (!dup) picked.push_back(cand);
      }
      for (int p : picked) t.deps.push_back(fmt_id("n%03ld", p));
    }
    g.add_task(std::move(t));
  }
  g.validate();
  return g;
}

}  // namespace dagrun
