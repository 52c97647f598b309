#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wspace {

/// Number of worker threads used by the library. 0 means
/// std::thread::hardware_concurrency().
void set_thread_count(unsigned n);
unsigned thread_count();

/// Calls body(i) for i in [0, n). Work is split into contiguous chunks, one
/// per worker; callers write results into pre-sized slots so output order
/// never depends on scheduling. The first exception thrown by any worker is
/// rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Pairwise (tree) summation; the result depends only on the input order.
template <class Vec>
double pairwise_sum(const Vec& v, std::size_t lo, std::size_t hi) {
  if (hi - lo <= 8) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += v[i];
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

template <class Vec>
double pairwise_sum(const Vec& v) {
  return pairwise_sum(v, 0, static_cast<std::size_t>(v.size()));
}

}  // namespace wspace
