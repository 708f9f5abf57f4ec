#pragma once

#include <cstdint>

namespace teamlearn {

// Deterministic counter-based generator (splitmix64 finalizer).  All
// randomness in the library flows through this type so that a run is
// reproducible bit-for-bit from its root seed, independent of platform
// RNG library details and of how many worker threads execute seeds.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    next();
    next();
  }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in {0, ..., n-1}; n must be positive and far below
  // 2^64 so modulo bias is negligible for simulation purposes.
  int uniform_int(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }

  // Derive an independent stream; used to give each agent and the
  // environment their own generator within one seeded run.
  static std::uint64_t derive(std::uint64_t root, std::uint64_t stream) {
    std::uint64_t z = root ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace teamlearn
