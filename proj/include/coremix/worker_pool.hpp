#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace coremix {

/// Runs task(i) for i in [0, count) on at most `concurrency` threads. Indices are claimed
/// in increasing order. After the first exception no new indices are started; the
/// exception from the lowest failing index is rethrown once all workers have joined.
template <class Task> void parallel_for(std::size_t count, std::size_t concurrency, Task &&task) {
  if (count == 0)
    return;
  concurrency = std::clamp<std::size_t>(concurrency, 1, count);
  if (concurrency == 1) {
    for (std::size_t i = 0; i < count; ++i)
      task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_index = count;

  auto worker = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count)
        return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
        stop = true;
      }
    }
  };
  {
    std::vector<std::jthread> threads;
    threads.reserve(concurrency);
    for (std::size_t t = 0; t < concurrency; ++t)
      threads.emplace_back(worker);
  }
  if (error)
    std::rethrow_exception(error);
}

} // namespace coremix
