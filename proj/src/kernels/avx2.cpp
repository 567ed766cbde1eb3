// Compiled with -mavx2; only reached after a runtime CPU check.
#include <immintrin.h>

#include "flowshift/kernels.hpp"

namespace flowshift::kernels::avx2 {

void scale_u64(std::span<const std::uint64_t> values, std::span<const std::uint32_t> factors,
               std::span<std::uint64_t> out) {
  const std::size_t n = values.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(values.data() + i));
    __m128i f32 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(factors.data() + i));
    __m256i f = _mm256_cvtepu32_epi64(f32);
    // (hi*2^32 + lo) * f = lo*f + ((hi*f) << 32), modulo 2^64.
    __m256i lo = _mm256_mul_epu32(v, f);
    __m256i hi = _mm256_mul_epu32(_mm256_srli_epi64(v, 32), f);
    __m256i r = _mm256_add_epi64(lo, _mm256_slli_epi64(hi, 32));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out.data() + i), r);
  }
  for (; i < n; ++i) out[i] = values[i] * factors[i];
}

std::uint64_t sum_u64(std::span<const std::uint64_t> values) {
  const std::size_t n = values.size();
  __m256i acc0 = _mm256_setzero_si256();
  __m256i acc1 = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_epi64(acc0, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(values.data() + i)));
    acc1 = _mm256_add_epi64(acc1, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(values.data() + i + 4)));
  }
  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), _mm256_add_epi64(acc0, acc1));
  std::uint64_t s = lanes[0] + lanes[1] + lanes[2] + lanes[3];
  for (; i < n; ++i) s += values[i];
  return s;
}

Moments moments_f64(std::span<const double> values) {
  const std::size_t n = values.size();
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  __m256d q0 = _mm256_setzero_pd(), q1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d a = _mm256_loadu_pd(values.data() + i);
    __m256d b = _mm256_loadu_pd(values.data() + i + 4);
    s0 = _mm256_add_pd(s0, a);
    s1 = _mm256_add_pd(s1, b);
    q0 = _mm256_add_pd(q0, _mm256_mul_pd(a, a));
    q1 = _mm256_add_pd(q1, _mm256_mul_pd(b, b));
  }
  alignas(32) double ls[4], lq[4];
  _mm256_store_pd(ls, _mm256_add_pd(s0, s1));
  _mm256_store_pd(lq, _mm256_add_pd(q0, q1));
  Moments m{(ls[0] + ls[1]) + (ls[2] + ls[3]), (lq[0] + lq[1]) + (lq[2] + lq[3])};
  for (; i < n; ++i) {
    m.sum += values[i];
    m.sum_sq += values[i] * values[i];
  }
  return m;
}

}  // namespace flowshift::kernels::avx2
