#pragma once

#include <cmath>
#include <cstdint>

// Reproducibility contract. Every random decision in this library is derived
// from one of two documented primitives:
//
//   stream_at(seed, t)      the t-th (0-based) output of SplitMix64 seeded
//                           with `seed`: mix64(seed + (t+1) * GAMMA), where
//                           mix64 is the standard SplitMix64 finalizer and
//                           GAMMA = 0x9E3779B97F4A7C15. Counter-based, so it
//                           supports random access and vectorization.
//
//   derive_seed(base, r)    mix64(mix64(base + GAMMA) + (r+1) * GAMMA).
//                           Used to fan a base seed out into independent
//                           replica / substream seeds.
//
// Bernoulli decisions compare the top 63 bits of a stream value against
// bernoulli_threshold(q) = floor(q * 2^63) (clamped to [0, 2^63]), so q = 0
// never accepts and q >= 1 always accepts, exactly.

namespace perclim::rng {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 output function (Stafford's Mix13 finalizer).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// t-th output of the SplitMix64 sequence seeded with `seed`.
constexpr std::uint64_t stream_at(std::uint64_t seed, std::uint64_t t) noexcept {
  return mix64(seed + (t + 1) * kGamma);
}

// Replica seed derivation (avalanche the base first so nearby base seeds do
// not produce overlapping streams).
constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
  return mix64(mix64(base_seed + kGamma) + (index + 1) * kGamma);
}

// Acceptance threshold for "u63 < threshold" Bernoulli tests, u63 being a
// stream value shifted right by one bit.
constexpr std::uint64_t bernoulli_threshold(double q) noexcept {
  if (q <= 0.0) return 0;
  if (q >= 1.0) return 1ULL << 63;
  return static_cast<std::uint64_t>(q * 0x1p63);
}

constexpr bool bernoulli_hit(std::uint64_t seed, std::uint64_t t, std::uint64_t threshold63) noexcept {
  return (stream_at(seed, t) >> 1) < threshold63;
}

// Sequential generator for simulation paths that consume randomness in
// program order (branching process, binomial skip sampling).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += kGamma;
    return mix64(state_);
  }

  // Uniform on [0, 1), 53 random bits.
  double next_double() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on {0, ..., bound-1} by rejection (bound >= 1).
  std::uint64_t next_below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % bound;
  }

 private:
  std::uint64_t state_;
};

// Poisson sample by CDF inversion, one uniform per chunk. Means above 30 are
// split into chunks so exp(-lambda) stays comfortably in normal double range.
inline std::uint64_t poisson(SplitMix64& gen, double lambda) {
  std::uint64_t total = 0;
  while (lambda > 30.0) {
    lambda -= 30.0;
    double u = gen.next_double();
    double p = std::exp(-30.0), cum = p;
    std::uint64_t k = 0;
    while (u >= cum && k < 4000) {
      ++k;
      p *= 30.0 / static_cast<double>(k);
      cum += p;
    }
    total += k;
  }
  if (lambda <= 0.0) return total;
  double u = gen.next_double();
  double p = std::exp(-lambda), cum = p;
  std::uint64_t k = 0;
  while (u >= cum && k < 4000) {
    ++k;
    p *= lambda / static_cast<double>(k);
    cum += p;
  }
  return total + k;
}

}  // namespace perclim::rng
