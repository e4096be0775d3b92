#pragma once

#include <cstdint>
#include <random>

#include "placer/common.hpp"

namespace placer {

// Deterministic RNG used everywhere randomness is needed. mt19937_64 output
// is fully specified by the standard; the uniform/bounded mappings below are
// our own so that streams are bit-identical across platforms and compilers
// (std::uniform_*_distribution makes no such guarantee).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) via bitmask rejection.
  std::uint64_t below(std::uint64_t n);

  // Draws an index from a probability vector by CDF walk in index order.
  // Entries that are exactly zero can never be drawn.
  int categorical(const Vector& probs);

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed from (seed, stream). Pure function.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

}  // namespace placer
