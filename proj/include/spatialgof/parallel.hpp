#ifndef SPATIALGOF_PARALLEL_HPP
#define SPATIALGOF_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spatialgof {

/// Worker count: `requested` if positive, else hardware concurrency,
/// both capped by the SPATIAL_GOF_THREADS environment variable.
inline int effective_threads(int requested = 0) {
  int n = requested > 0 ? requested
                        : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("SPATIAL_GOF_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1 && cap < n) n = cap;
  }
  return n;
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// processed exactly once; callers store results by index so the outcome is
/// independent of scheduling. The first exception is rethrown after join.
template <typename Fn>
void parallel_for_indexed(std::size_t count, int threads, Fn&& fn) {
  const int nthreads = std::min<std::size_t>(effective_threads(threads), count);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace spatialgof

#endif  // SPATIALGOF_PARALLEL_HPP
