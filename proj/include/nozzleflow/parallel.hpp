#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace nozzle {

// Runs fn(begin, end) over contiguous chunks of [0, n).  With threads <= 1 the
// whole range runs on the calling thread.
template <class Fn>
void parallel_chunks(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2 * threads) {
    fn(0, n);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(threads) - 1);
  const int chunk = (n + threads - 1) / threads;
  for (int t = 1; t < threads; ++t) {
    const int b = t * chunk, e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  fn(0, std::min(n, chunk));
}

inline int default_thread_count() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace nozzle
