#pragma once

#include <cstdint>
#include <random>

namespace pai {

/// Seeded random source with independent, individually reproducible streams.
/// Identical (seed, stream) always yields the identical draw sequence,
/// regardless of platform: all distribution shaping is done in-house on top
/// of raw mt19937_64 output.
class RandomSource {
 public:
  RandomSource(std::uint64_t seed, std::uint64_t stream)
      : engine_(mix(seed, stream)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in (0, 1), safe as a quantile-function argument.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via inverse-CDF sampling (declared in stats.hpp).
  double normal();

  /// Integer in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    // rejection from the top of the range
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

 private:
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over both words
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace pai
