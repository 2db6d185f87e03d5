#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ebsdict {

/// Worker count from EBSDICT_WORKERS, else the hardware concurrency (>= 1).
[[nodiscard]] int default_workers();

/// Calls fn(begin, end) on contiguous chunks of [0, n) from up to `workers`
/// threads. Results must be written by index so the output does not depend on
/// scheduling. The first exception thrown by a worker is rethrown.
template <class Fn>
void parallel_chunks(std::size_t n, int workers, Fn&& fn) {
  const std::size_t w = std::clamp<std::size_t>(workers < 1 ? 1 : static_cast<std::size_t>(workers), 1, std::max<std::size_t>(n, 1));
  if (w == 1 || n < 2) {
    if (n > 0) fn(std::size_t{0}, n);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    const std::size_t begin = n * t / w;
    const std::size_t end = n * (t + 1) / w;
    threads.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  parallel_chunks(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
  });
}

}  // namespace ebsdict
