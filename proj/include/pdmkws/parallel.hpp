#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pdmkws {

/// Runs fn(i) for i in [0, n) on up to `workers` threads, each taking a
/// contiguous block of indices. The first exception thrown is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const auto w = static_cast<std::size_t>(std::max(1, workers));
  if (w == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t used = std::min(w, n);
  const std::size_t block = (n + used - 1) / used;
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> threads;
    threads.reserve(used);
    for (std::size_t t = 0; t < used; ++t) {
      threads.emplace_back([&, t] {
        try {
          const std::size_t end = std::min(n, (t + 1) * block);
          for (std::size_t i = t * block; i < end; ++i) fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace pdmkws
