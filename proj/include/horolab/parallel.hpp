#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace horolab {

// Execution policy for the Monte Carlo fan-outs. Every kernel that takes a
// policy produces identical output under both: work items are seeded by
// index and results are merged in index order.
enum class Exec { serial, parallel };

int max_threads();
void set_max_threads(int n);

// Applies HOROLAB_THREADS if it is set to a positive integer.
void configure_threads_from_env();

// Calls fn(i) for i in [0, n).
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn, Exec exec);

template <class T, class Fn>
std::vector<T> map_indices(std::size_t n, Fn&& fn, Exec exec) {
  std::vector<T> out(n);
  for_each_index(n, [&](std::size_t i) { out[i] = fn(i); }, exec);
  return out;
}

// Deterministic per-item seed derived from a run seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

} // namespace horolab
