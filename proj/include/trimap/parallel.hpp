#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "trimap/types.hpp"

namespace trimap {

namespace detail {

inline std::atomic<int>& thread_setting() {
  static std::atomic<int> setting{0};
  return setting;
}

}  // namespace detail

// 0 restores the default: TRIMAP_NUM_THREADS if set, else hardware concurrency.
inline void set_num_threads(int threads) { detail::thread_setting().store(std::max(threads, 0)); }

inline int num_threads() {
  const int configured = detail::thread_setting().load();
  if (configured > 0) return configured;
  if (const char* env = std::getenv("TRIMAP_NUM_THREADS")) {
    const int value = std::atoi(env);
    if (value > 0) return value;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Splits [0, count) into `shards` contiguous ranges and runs body(shard, begin, end).
// The partition depends only on (count, shards), never on scheduling.
template <typename Body>
void parallel_shards(Index count, int shards, Body&& body) {
  shards = static_cast<int>(std::clamp<Index>(shards, 1, std::max<Index>(count, 1)));
  const auto bounds = [&](int s) { return count * s / shards; };
  if (shards == 1) {
    body(0, Index{0}, count);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(shards - 1);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&](int s) {
    try {
      body(s, bounds(s), bounds(s + 1));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  for (int s = 1; s < shards; ++s) workers.emplace_back(run, s);
  run(0);
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

// Runs body(i) for every i in [0, count) using num_threads() workers.
template <typename Body>
void parallel_for(Index count, Body&& body) {
  parallel_shards(count, num_threads(), [&](int, Index begin, Index end) {
    for (Index i = begin; i < end; ++i) body(i);
  });
}

}  // namespace trimap
