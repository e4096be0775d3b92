#include "placer/rng.hpp"

namespace placer {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw_error(ErrorCode::InvalidParams, "Rng::below(0)");
  if (n == 1) return 0;
  std::uint64_t mask = n - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  for (;;) {
    std::uint64_t x = next_u64() & mask;
    if (x < n) return x;
  }
}

int Rng::categorical(const Vector& probs) {
  double u = uniform();
  double acc = 0;
  int last_positive = -1;
  for (int j = 0; j < probs.size(); ++j) {
    double p = probs[j];
    if (p <= 0) continue;
    last_positive = j;
    acc += p;
    if (u < acc) return j;
  }
  // Rounding can leave acc marginally below 1; fall back to the last
  // positive-probability entry.
  if (last_positive < 0) throw_error(ErrorCode::InvalidParams, "categorical: no positive mass");
  return last_positive;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  std::uint64_t a = splitmix64(state);
  std::uint64_t b = splitmix64(state);
  return a ^ (b + 0x632be59bd9b4e019ULL);
}

}  // namespace placer
