#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace rsc {

// Upper bound on worker threads used by scenario-parallel loops. 0 means hardware concurrency.
void set_max_threads(unsigned threads);
unsigned max_threads();

// Runs body(i) for i in [0, count). Each index is visited exactly once; callers write
// results into per-index slots so the outcome does not depend on the thread count.
template <typename Body>
void parallel_for(Eigen::Index count, Body&& body) {
  const unsigned workers =
      static_cast<unsigned>(std::min<Eigen::Index>(static_cast<Eigen::Index>(max_threads()), count));
  if (workers <= 1) {
    for (Eigen::Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  const Eigen::Index chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const Eigen::Index begin = w * chunk;
    const Eigen::Index end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, &errors, w, begin, end] {
      try {
        for (Eigen::Index i = begin; i < end; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  // Lowest chunk first, so the reported failure is the one a serial run would hit.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace rsc
