#pragma once

#include <cstdint>
#include <cstdlib>
#include <string_view>
#include <thread>
#include <vector>

#include "stlab/rng.hpp"

// Replicate fan-out. Every replicate owns a stream derived purely from
// (master seed, replicate index, stage tag), and workers write to
// replicate-indexed slots, so results are independent of the thread count
// and of scheduling.

namespace stlab {

inline unsigned hardware_threads_capped() {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("STLAB_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) n = static_cast<unsigned>(std::min<long>(v, 256));
  }
  return n;
}

// f(replicate_index, rng) is called exactly once per replicate.
template <typename F>
void parallel_replicates(std::size_t replicates, uint64_t master_seed,
                         std::string_view stage, F&& f) {
  unsigned workers = hardware_threads_capped();
  if (workers <= 1 || replicates < 2 * workers) {
    for (std::size_t k = 0; k < replicates; ++k) {
      RandomStream rng(derive_seed(master_seed, k, stage));
      f(k, rng);
    }
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < replicates; k += workers) {
        RandomStream rng(derive_seed(master_seed, k, stage));
        f(k, rng);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace stlab
