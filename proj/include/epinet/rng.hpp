#pragma once

#include <cstdint>

namespace epinet {

// Counter-based pseudo-random generator (SplitMix64). Each draw advances a
// 64-bit counter by a fixed odd increment and finalizes it with a mixing
// function, so the stream is a pure function of (seed, draw index). Child
// streams are derived from (seed, id) without consuming draws from the
// parent, which keeps replicate-level parallelism reproducible regardless of
// scheduling. All distributions are built on next_u64() only, so sequences
// are bit-identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Seed for an independent child stream identified by `id`.
  std::uint64_t derive_seed(std::uint64_t id) const {
    return mix(state_ + kGamma * (id + 1));
  }

  Rng derive(std::uint64_t id) const { return Rng(derive_seed(id)); }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n), n >= 1; rejection sampling avoids modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace epinet
