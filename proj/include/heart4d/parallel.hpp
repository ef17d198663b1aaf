#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace heart4d {

/// Runs fn(0..n-1) on up to `threads` workers. Each index owns its own
/// output slot, so results are independent of the schedule; callers do
/// any reduction afterwards in fixed index order.
inline void parallel_indexed(int n, int threads,
                             const std::function<void(int)>& fn) {
  const int n_workers = std::max(1, std::min(threads, n));
  if (n_workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w)
    pool.emplace_back([&] {
      int i;
      while ((i = next.fetch_add(1)) < n) fn(i);
    });
  for (auto& th : pool) th.join();
}

inline int hardware_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace heart4d
