#include "mobolfi/parallel.hpp"

#include <atomic>

namespace mobolfi {

namespace {
std::atomic<std::size_t> g_max_threads{1};
}

std::size_t max_threads() { return g_max_threads.load(); }

void set_max_threads(std::size_t n) { g_max_threads.store(n == 0 ? 1 : n); }

}  // namespace mobolfi
