#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace conceptscope {

inline int worker_count() {
  if (const char* env = std::getenv("CONCEPT_SCOPE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 4;
}

/// Runs fn(i) for i in [0, n). Work items may execute on any thread but
/// callers index results by i, so output order never depends on scheduling.
/// The first exception (lowest index) is rethrown on the calling thread.
inline void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
  const int workers = std::min<size_t>(worker_count(), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::mutex err_mu;
  size_t err_index = n;
  std::exception_ptr err;
  std::atomic<size_t> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (i < err_index) {
            err_index = i;
            err = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace conceptscope
