#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace dagrun {

// FNV-1a. Used for shard placement, coordination-op ids and digests; unlike
// std::hash its output is pinned, so ids and shard choices are reproducible
// across builds and platforms.
constexpr uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex16(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

// splitmix64: tiny stateless generator used where we need seed-addressable
// deterministic values (workload inputs, per-cell seeds).
constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace dagrun
