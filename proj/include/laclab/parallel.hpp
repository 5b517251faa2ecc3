#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace laclab {

/// Thread count: explicit request if > 0, else LACLAB_THREADS, else hardware.
unsigned resolve_threads(unsigned requested);

/// Runs body(replica) for replica in [0, count) on a worker pool. Results must be
/// written to per-replica slots by the caller; the first exception is rethrown.
/// Each worker takes a contiguous chunk, so scheduling never affects results.
template <class Body>
void for_each_replica(std::size_t count, unsigned threads, Body&& body) {
  threads = resolve_threads(threads);
  if (threads <= 1 || count < 2) {
    for (std::size_t r = 0; r < count; ++r) body(r);
    return;
  }
  if (threads > count) threads = static_cast<unsigned>(count);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = count * t / threads;
    const std::size_t end = count * (t + 1) / threads;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t r = begin; r < end; ++r) body(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace laclab
