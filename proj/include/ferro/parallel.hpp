#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace ferro {

/// Worker-thread cap: FERROSOLVE_THREADS if set and positive, else the
/// hardware concurrency.
inline int worker_threads() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FERROSOLVE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) n = v;
  }
  return std::max(n, 1);
}

/// Runs fn(i) for i in [0, n). Splits into contiguous chunks across threads
/// only when there is enough work to amortize thread start-up.
template <class F>
void parallel_for(int n, F&& fn, int min_parallel = 4096) {
  const int threads = std::min(worker_threads(), std::max(n / 1024, 1));
  if (threads <= 1 || n < min_parallel) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace ferro
