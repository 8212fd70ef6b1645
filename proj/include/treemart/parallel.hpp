#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace treemart {

/// Worker count: explicit flag > environment TREEMART_THREADS > hardware.
unsigned resolve_threads(std::optional<unsigned> flag = std::nullopt);

/// Runs fn(replica) for replica in [0, count) on `threads` workers. Callers
/// write results into per-replica slots, so the outcome does not depend on
/// scheduling order. The first exception thrown by a worker is rethrown.
template <class Fn>
void for_each_replica(std::int64_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::int64_t r = 0; r < count; ++r) fn(r);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    const auto workers = static_cast<std::int64_t>(threads) < count
                             ? threads
                             : static_cast<unsigned>(count);
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::int64_t r = next++; r < count; r = next++) {
          try {
            fn(r);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace treemart
