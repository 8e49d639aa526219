#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace bflab {

inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

/// Runs fn(replicate, worker) for replicate in [0, count). Replicates are
/// claimed from a shared counter; results must be written to per-replicate
/// slots (or per-worker accumulators merged associatively) so the output does
/// not depend on scheduling.
inline void parallel_replicates(int count, int workers,
                                const std::function<void(int, int)>& fn) {
  workers = std::min(resolve_workers(workers), std::max(count, 1));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i, 0);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  pool.reserve(std::size_t(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i, w);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace bflab
