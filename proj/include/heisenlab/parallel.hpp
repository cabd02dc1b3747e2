#pragma once

// Static-partition parallel loops. Each index is processed by exactly one
// worker and writes only its own outputs, so results never depend on the
// worker count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace heisenlab {

namespace detail {
inline std::atomic<int>& job_count() {
  static std::atomic<int> jobs{1};
  return jobs;
}
/// Per-thread override; scan workers pin their inner loops to one thread.
inline int& thread_jobs() {
  thread_local int jobs = 0;
  return jobs;
}
}  // namespace detail

/// Worker count used by library loops; values < 1 select hardware concurrency.
inline void set_jobs(int jobs) {
  if (jobs < 1) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  detail::job_count().store(jobs);
}
inline int jobs() {
  const int local = detail::thread_jobs();
  return local > 0 ? local : detail::job_count().load();
}

/// Calls body(begin, end) on disjoint contiguous chunks covering [0, count).
template <class Body>
void parallel_for(std::size_t count, Body&& body, int workers = jobs()) {
  if (count == 0) return;
  const std::size_t w = std::min<std::size_t>(std::max(1, workers), count);
  if (w == 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mutex;
  const std::size_t chunk = (count + w - 1) / w;
  for (std::size_t i = 0; i < w; ++i) {
    const std::size_t b = i * chunk;
    const std::size_t e = std::min(count, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, b, e] {
      detail::thread_jobs() = 1;
      try {
        body(b, e);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace heisenlab
