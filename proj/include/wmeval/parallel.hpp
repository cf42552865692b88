#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace wmeval {

// Worker cap: WMEVAL_THREADS if set to a positive integer, else hardware concurrency.
unsigned worker_count();

// Runs body(i) for i in [0, n) on up to worker_count() threads. The exception
// from the lowest failing index is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// SplitMix64 finalizer; used to derive independent per-item seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix_seed(master ^ mix_seed(index + 1));
}

}  // namespace wmeval
