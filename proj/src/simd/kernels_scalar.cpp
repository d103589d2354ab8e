#include "perclim/rng.hpp"
#include "perclim/simd.hpp"

// Reference kernels. The dot accumulation pattern is the contract the SIMD
// variants must reproduce bitwise; keep it stride-4 with the documented
// combine order.

namespace perclim::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 += a[i] * b[i];
    acc1 += a[i + 1] * b[i + 1];
    acc2 += a[i + 2] * b[i + 2];
    acc3 += a[i + 3] * b[i + 3];
  }
  double r = (acc0 + acc2) + (acc1 + acc3);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

std::size_t hits_const_scalar(std::uint64_t seed, std::uint64_t t0, std::size_t len,
                              std::uint64_t threshold63, std::uint32_t* out) {
  std::size_t hits = 0;
  std::uint64_t state = seed + (t0 + 1) * rng::kGamma;
  for (std::size_t o = 0; o < len; ++o, state += rng::kGamma) {
    if ((rng::mix64(state) >> 1) < threshold63) out[hits++] = static_cast<std::uint32_t>(o);
  }
  return hits;
}

std::size_t hits_varying_scalar(std::uint64_t seed, std::uint64_t t0, std::size_t len,
                                const std::uint64_t* thresholds63, std::uint32_t* out) {
  std::size_t hits = 0;
  std::uint64_t state = seed + (t0 + 1) * rng::kGamma;
  for (std::size_t o = 0; o < len; ++o, state += rng::kGamma) {
    if ((rng::mix64(state) >> 1) < thresholds63[o]) out[hits++] = static_cast<std::uint32_t>(o);
  }
  return hits;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", dot_scalar, hits_const_scalar, hits_varying_scalar};
  return table;
}

}  // namespace perclim::simd
