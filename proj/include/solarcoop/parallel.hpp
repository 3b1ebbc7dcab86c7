#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace solarcoop {

struct ExecutionOptions {
  unsigned workers = 0;  // 0: one per hardware thread
};

inline unsigned resolve_workers(const ExecutionOptions& opts, std::size_t tasks) {
  unsigned w = opts.workers ? opts.workers : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(w, std::max<std::size_t>(tasks, 1)));
}

// Runs task(i) for i in [0, tasks) on a pool of workers. Tasks must write only
// to state they own; callers reduce per-task results in index order so the
// outcome does not depend on the worker count.
template <typename Task>
void run_tasks(std::size_t tasks, const ExecutionOptions& opts, Task&& task) {
  const unsigned workers = resolve_workers(opts, tasks);
  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto loop = [&] {
    for (std::size_t i = next.fetch_add(1); i < tasks; i = next.fetch_add(1)) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace solarcoop
