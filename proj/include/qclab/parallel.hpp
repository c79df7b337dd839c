#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace qclab {

// Worker count: QCLAB_THREADS sets it outright (oversubscription is fine and
// useful for testing the reduction order); absence means the machine default.
inline int worker_count() {
  if (const char* env = std::getenv("QCLAB_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1 && n <= 4096) return static_cast<int>(n);
  }
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  return static_cast<int>(hw);
}

// Runs fn(task) for task = 0..num_tasks-1 on a worker pool. Each task writes
// only its own slot of whatever the caller indexes by task, so the result is
// identical for any worker count; callers combine slots in task order.
inline void parallel_for(std::size_t num_tasks, const std::function<void(std::size_t)>& fn) {
  const int workers = worker_count();
  if (workers <= 1 || num_tasks <= 1) {
    for (std::size_t t = 0; t < num_tasks; ++t) fn(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto run = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= num_tasks) return;
      fn(t);
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<std::size_t>(workers, num_tasks);
  pool.reserve(n);
  for (int i = 0; i < n; ++i) pool.emplace_back(run);
  for (auto& th : pool) th.join();
}

}  // namespace qclab
