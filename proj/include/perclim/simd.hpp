#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

// Runtime-dispatched inner-loop kernels. Two families:
//
//  * dot            dense double dot product. The reference semantics are a
//                   stride-4 accumulation: acc[k] sums elements with index
//                   congruent to k mod 4, combined as (acc0+acc2)+(acc1+acc3),
//                   then a scalar tail. The AVX2 variant reproduces this
//                   bitwise (one 4-lane vector accumulator, no FMA).
//
//  * hits_const /   Bernoulli scan over a counter-based random stream:
//    hits_varying   offset o in [0,len) is a hit iff
//                   (rng::stream_at(seed, t0+o) >> 1) < threshold. Integer
//                   arithmetic only, so all variants agree bitwise.
//
// The active table is chosen at first use: the PERCLIM_SIMD environment
// variable ("scalar", "avx2", "auto") if set, otherwise the best variant the
// CPU supports. select() overrides the choice at runtime.

namespace perclim::simd {

struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // Appends hit offsets (relative to t0) to out; returns the hit count.
  std::size_t (*hits_const)(std::uint64_t seed, std::uint64_t t0, std::size_t len,
                            std::uint64_t threshold63, std::uint32_t* out);
  // Same with a per-offset threshold array.
  std::size_t (*hits_varying)(std::uint64_t seed, std::uint64_t t0, std::size_t len,
                              const std::uint64_t* thresholds63, std::uint32_t* out);
};

const KernelTable& scalar_table();
#if defined(__x86_64__)
const KernelTable& avx2_table();
bool cpu_has_avx2();
#endif

// Currently active kernel table.
const KernelTable& active();

// Force a variant by name ("scalar", "avx2", "auto"). Returns false if the
// variant is unknown or unsupported on this CPU.
bool select(const std::string& name);

std::vector<std::string> available();

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}

}  // namespace perclim::simd
