#pragma once

// Replica-parallel driver. Work is claimed through an atomic counter; every
// replica writes only to its own slot and the caller reduces in index order
// afterwards, so results never depend on the thread count.

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace crpmat {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// fn(worker_id, replica_index) is invoked exactly once per replica index.
// worker_id < threads indexes per-thread scratch owned by the caller.
template <class Fn>
void parallel_replicas(std::uint64_t replicas, int threads, Fn&& fn) {
  threads = resolve_threads(threads);
  if (threads == 1 || replicas < 2) {
    for (std::uint64_t r = 0; r < replicas; ++r) fn(0, r);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&](int wid) {
    try {
      for (;;) {
        const std::uint64_t r = next.fetch_add(1);
        if (r >= replicas) return;
        fn(wid, r);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!error) error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace crpmat
