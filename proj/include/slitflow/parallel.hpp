#pragma once
// Minimal deterministic parallel loop. Work items are indexed; each worker
// owns a contiguous block and writes to disjoint slots, so results do not
// depend on thread count or scheduling. Reductions happen serially afterwards.

#include <thread>
#include <vector>
#include <functional>
#include <exception>
#include <cstddef>

namespace slitflow {

inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  std::size_t t = threads > 0 ? static_cast<std::size_t>(threads) : (hw ? hw : 1);
  t = std::min(t, n);
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(t);
  for (std::size_t w = 0; w < t; ++w) {
    pool.emplace_back([&, w]() {
      std::size_t lo = w * n / t, hi = (w + 1) * n / t;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace slitflow
