#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rna {

// Runs func(i) for i in [0, count) on up to `threads` workers (0 = hardware
// concurrency). Work items are claimed dynamically; callers keep results
// independent of scheduling by writing to per-item slots.
template <typename Func>
void parallel_for(int count, int threads, Func&& func) {
  if (count <= 0) return;
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, count);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) func(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      while (true) {
        auto i = next.fetch_add(1);
        if (i >= count) break;
        try {
          func(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  workers.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace rna
