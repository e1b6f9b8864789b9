#include "rsc/parallel.hpp"

namespace rsc {

namespace {
std::atomic<unsigned> g_max_threads{1};
}

void set_max_threads(unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  g_max_threads.store(threads);
}

unsigned max_threads() { return g_max_threads.load(); }

}  // namespace rsc
