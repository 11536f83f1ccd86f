#pragma once
// Deterministic parallel-for over independent work items. WEIGHTFORGE_THREADS
// caps the worker count (default 1). Each item writes only its own slot, so
// results are identical regardless of scheduling.

#include <cstdlib>
#include <cstddef>
#include <thread>
#include <vector>

namespace weightforge {

inline std::size_t thread_cap() {
  const char* env = std::getenv("WEIGHTFORGE_THREADS");
  if (env == nullptr) return 1;
  long v = std::strtol(env, nullptr, 10);
  if (v <= 1) return 1;
  return static_cast<std::size_t>(v);
}

template <typename F>
void parallel_for(std::size_t n, F&& body) {
  const std::size_t workers = std::min(thread_cap(), n == 0 ? std::size_t{1} : n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace weightforge
