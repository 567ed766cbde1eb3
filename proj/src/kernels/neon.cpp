#include "flowshift/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace flowshift::kernels::neon {

void scale_u64(std::span<const std::uint64_t> values, std::span<const std::uint32_t> factors,
               std::span<std::uint64_t> out) {
  const std::size_t n = values.size();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    uint64x2_t v = vld1q_u64(values.data() + i);
    uint32x2_t f = vld1_u32(factors.data() + i);
    uint32x2_t vlo = vmovn_u64(v);
    uint32x2_t vhi = vshrn_n_u64(v, 32);
    uint64x2_t lo = vmull_u32(vlo, f);
    uint64x2_t hi = vmull_u32(vhi, f);
    vst1q_u64(out.data() + i, vaddq_u64(lo, vshlq_n_u64(hi, 32)));
  }
  for (; i < n; ++i) out[i] = values[i] * factors[i];
}

std::uint64_t sum_u64(std::span<const std::uint64_t> values) {
  const std::size_t n = values.size();
  uint64x2_t acc = vdupq_n_u64(0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_u64(acc, vld1q_u64(values.data() + i));
  std::uint64_t s = vgetq_lane_u64(acc, 0) + vgetq_lane_u64(acc, 1);
  for (; i < n; ++i) s += values[i];
  return s;
}

Moments moments_f64(std::span<const double> values) {
  const std::size_t n = values.size();
  float64x2_t s = vdupq_n_f64(0.0), q = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t a = vld1q_f64(values.data() + i);
    s = vaddq_f64(s, a);
    q = vfmaq_f64(q, a, a);
  }
  Moments m{vgetq_lane_f64(s, 0) + vgetq_lane_f64(s, 1), vgetq_lane_f64(q, 0) + vgetq_lane_f64(q, 1)};
  for (; i < n; ++i) {
    m.sum += values[i];
    m.sum_sq += values[i] * values[i];
  }
  return m;
}

}  // namespace flowshift::kernels::neon
#endif
