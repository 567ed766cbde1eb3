#include "flowshift/kernels.hpp"

namespace flowshift::kernels::scalar {

void scale_u64(std::span<const std::uint64_t> values, std::span<const std::uint32_t> factors,
               std::span<std::uint64_t> out) {
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * factors[i];
}

std::uint64_t sum_u64(std::span<const std::uint64_t> values) {
  std::uint64_t s = 0;
  for (auto v : values) s += v;
  return s;
}

Moments moments_f64(std::span<const double> values) {
  Moments m;
  for (double v : values) {
    m.sum += v;
    m.sum_sq += v * v;
  }
  return m;
}

}  // namespace flowshift::kernels::scalar
