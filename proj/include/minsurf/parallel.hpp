#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace minsurf {

/// Number of worker threads for per-pixel kernels. Controlled by the
/// MINSURF_THREADS environment variable; 0 or unset picks the hardware
/// concurrency. Reductions stay sequential regardless, so results do not
/// depend on this value.
inline int thread_count() {
  static const int n = [] {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    const char* env = std::getenv("MINSURF_THREADS");
    if (env == nullptr || *env == '\0') return hw;
    int requested = std::atoi(env);
    if (requested <= 0) return hw;
    return std::min(requested, hw);
  }();
  return n;
}

namespace detail {

// Minimum pixel count before a map is worth fanning out.
inline constexpr long kParallelGrainPixels = 1 << 16;

} // namespace detail

/// Run fn(row_begin, row_end) over a partition of [0, rows). Each chunk
/// writes disjoint rows, so the result is identical for any thread count.
template <class Fn>
void parallel_rows(int rows, long pixels_total, Fn&& fn) {
  int workers = thread_count();
  if (workers <= 1 || pixels_total < detail::kParallelGrainPixels || rows < 2) {
    fn(0, rows);
    return;
  }
  workers = std::min(workers, rows);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers) - 1);
  const int chunk = (rows + workers - 1) / workers;
  for (int w = 1; w < workers; ++w) {
    const int begin = w * chunk;
    const int end = std::min(rows, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(0, std::min(rows, chunk));
  for (auto& t : pool) t.join();
}

} // namespace minsurf
