#if defined(__x86_64__)

#include <immintrin.h>

#include "perclim/rng.hpp"
#include "perclim/simd.hpp"

namespace perclim::simd {
namespace {

// 64x64 -> low 64 multiply per lane (no native instruction before AVX-512DQ):
// a*b = lo(a)*lo(b) + ((lo(a)*hi(b) + hi(a)*lo(b)) << 32).
inline __m256i mul64(__m256i a, __m256i b) {
  __m256i bswap = _mm256_shuffle_epi32(b, 0xB1);  // hi/lo halves of b swapped
  __m256i cross = _mm256_mullo_epi32(a, bswap);   // [lo*hi, hi*lo] 32-bit products
  __m256i crosssum = _mm256_add_epi32(cross, _mm256_srli_epi64(cross, 32));
  __m256i crosshi = _mm256_slli_epi64(crosssum, 32);
  __m256i lolo = _mm256_mul_epu32(a, b);          // full 64-bit lo*lo
  return _mm256_add_epi64(lolo, crosshi);
}

inline __m256i mix64_vec(__m256i z) {
  const __m256i c1 = _mm256_set1_epi64x(static_cast<long long>(0xBF58476D1CE4E5B9ULL));
  const __m256i c2 = _mm256_set1_epi64x(static_cast<long long>(0x94D049BB133111EBULL));
  z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 30));
  z = mul64(z, c1);
  z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 27));
  z = mul64(z, c2);
  return _mm256_xor_si256(z, _mm256_srli_epi64(z, 31));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  // (acc0+acc2)+(acc1+acc3), matching the scalar combine
  __m128d lo = _mm256_castpd256_pd128(acc);
  __m128d hi = _mm256_extractf128_pd(acc, 1);
  __m128d pair = _mm_add_pd(lo, hi);  // [acc0+acc2, acc1+acc3]
  double r = _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

// unsigned 64-bit compare: flip the sign bit on both sides, compare signed
const __m256i kSignBit = _mm256_set1_epi64x(static_cast<long long>(0x8000000000000000ULL));

std::size_t hits_const_avx2(std::uint64_t seed, std::uint64_t t0, std::size_t len,
                            std::uint64_t threshold63, std::uint32_t* out) {
  std::size_t hits = 0;
  const std::uint64_t base = seed + (t0 + 1) * rng::kGamma;
  __m256i state = _mm256_add_epi64(
      _mm256_set1_epi64x(static_cast<long long>(base)),
      _mm256_set_epi64x(static_cast<long long>(3 * rng::kGamma),
                        static_cast<long long>(2 * rng::kGamma),
                        static_cast<long long>(rng::kGamma), 0));
  const __m256i step = _mm256_set1_epi64x(static_cast<long long>(4 * rng::kGamma));
  const __m256i thr = _mm256_set1_epi64x(static_cast<long long>(threshold63 ^ (1ULL << 63)));
  std::size_t o = 0;
  for (; o + 4 <= len; o += 4, state = _mm256_add_epi64(state, step)) {
    __m256i u = _mm256_xor_si256(_mm256_srli_epi64(mix64_vec(state), 1), kSignBit);
    __m256i lt = _mm256_cmpgt_epi64(thr, u);
    int mask = _mm256_movemask_pd(_mm256_castsi256_pd(lt));
    while (mask) {
      int lane = __builtin_ctz(mask);
      out[hits++] = static_cast<std::uint32_t>(o + static_cast<std::size_t>(lane));
      mask &= mask - 1;
    }
  }
  std::uint64_t s = base + o * rng::kGamma;
  for (; o < len; ++o, s += rng::kGamma) {
    if ((rng::mix64(s) >> 1) < threshold63) out[hits++] = static_cast<std::uint32_t>(o);
  }
  return hits;
}

std::size_t hits_varying_avx2(std::uint64_t seed, std::uint64_t t0, std::size_t len,
                              const std::uint64_t* thresholds63, std::uint32_t* out) {
  std::size_t hits = 0;
  const std::uint64_t base = seed + (t0 + 1) * rng::kGamma;
  __m256i state = _mm256_add_epi64(
      _mm256_set1_epi64x(static_cast<long long>(base)),
      _mm256_set_epi64x(static_cast<long long>(3 * rng::kGamma),
                        static_cast<long long>(2 * rng::kGamma),
                        static_cast<long long>(rng::kGamma), 0));
  const __m256i step = _mm256_set1_epi64x(static_cast<long long>(4 * rng::kGamma));
  std::size_t o = 0;
  for (; o + 4 <= len; o += 4, state = _mm256_add_epi64(state, step)) {
    __m256i u = _mm256_xor_si256(_mm256_srli_epi64(mix64_vec(state), 1), kSignBit);
    __m256i thr = _mm256_xor_si256(
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(thresholds63 + o)), kSignBit);
    __m256i lt = _mm256_cmpgt_epi64(thr, u);
    int mask = _mm256_movemask_pd(_mm256_castsi256_pd(lt));
    while (mask) {
      int lane = __builtin_ctz(mask);
      out[hits++] = static_cast<std::uint32_t>(o + static_cast<std::size_t>(lane));
      mask &= mask - 1;
    }
  }
  std::uint64_t s = base + o * rng::kGamma;
  for (; o < len; ++o, s += rng::kGamma) {
    if ((rng::mix64(s) >> 1) < thresholds63[o]) out[hits++] = static_cast<std::uint32_t>(o);
  }
  return hits;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", dot_avx2, hits_const_avx2, hits_varying_avx2};
  return table;
}

bool cpu_has_avx2() { return __builtin_cpu_supports("avx2"); }

}  // namespace perclim::simd

#endif  // __x86_64__
