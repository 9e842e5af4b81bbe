#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace sobrem {

namespace detail {
inline std::atomic<int>& job_cap() {
  static std::atomic<int> cap{1};
  return cap;
}
}  // namespace detail

/// Caps the worker threads used by data-parallel loops; 0 means hardware
/// concurrency.
inline void set_max_jobs(int jobs) {
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  detail::job_cap().store(jobs);
}
inline int max_jobs() { return detail::job_cap().load(); }

/// Calls body(begin, end) over [0, n) split into fixed blocks. Block
/// boundaries do not depend on the thread count, so per-block results are
/// reproducible regardless of parallelism.
template <class Body>
void for_blocks(std::size_t n, std::size_t block, Body&& body) {
  const std::size_t nblocks = (n + block - 1) / block;
  const int jobs = std::min<int>(max_jobs(), static_cast<int>(nblocks));
  if (jobs <= 1) {
    for (std::size_t b = 0; b < nblocks; ++b) body(b, b * block, std::min(n, (b + 1) * block));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t b = next++; b < nblocks; b = next++)
        body(b, b * block, std::min(n, (b + 1) * block));
    });
}

inline constexpr std::size_t kBlock = 4096;

/// Deterministic parallel sum of f(i) over [0, n).
template <class F>
double parallel_sum(std::size_t n, F&& f) {
  const std::size_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks, 0.0);
  for_blocks(n, kBlock, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    partial[b] = s;
  });
  double s = 0.0;
  for (double v : partial) s += v;
  return s;
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
  for_blocks(n, kBlock, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) f(i);
  });
}

}  // namespace sobrem
