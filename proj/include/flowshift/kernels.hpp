#pragma once

// Data-parallel inner loops. Every kernel has a portable scalar reference in
// kernels::scalar and, where the target has one, a vectorized variant
// (AVX2 on x86-64, NEON on AArch64). The unqualified entry points dispatch
// once at startup based on the running CPU.

#include <cstdint>
#include <span>
#include <string_view>

namespace flowshift::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

// ISA chosen at runtime. FLOWSHIFT_FORCE_SCALAR=1 in the environment pins
// the scalar path.
Isa active_isa();

// True when the vectorized variant for `isa` can run on this machine.
bool isa_available(Isa isa);

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
};

// out[i] = values[i] * factors[i]; all spans the same length.
void scale_u64(std::span<const std::uint64_t> values, std::span<const std::uint32_t> factors,
               std::span<std::uint64_t> out);

// Wrapping 64-bit sum.
std::uint64_t sum_u64(std::span<const std::uint64_t> values);

// Sum and sum of squares. Vector variants reassociate the additions, so
// they agree with the scalar reference to rounding, not bit-for-bit.
Moments moments_f64(std::span<const double> values);

namespace scalar {
void scale_u64(std::span<const std::uint64_t> values, std::span<const std::uint32_t> factors,
               std::span<std::uint64_t> out);
std::uint64_t sum_u64(std::span<const std::uint64_t> values);
Moments moments_f64(std::span<const double> values);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void scale_u64(std::span<const std::uint64_t> values, std::span<const std::uint32_t> factors,
               std::span<std::uint64_t> out);
std::uint64_t sum_u64(std::span<const std::uint64_t> values);
Moments moments_f64(std::span<const double> values);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
void scale_u64(std::span<const std::uint64_t> values, std::span<const std::uint32_t> factors,
               std::span<std::uint64_t> out);
std::uint64_t sum_u64(std::span<const std::uint64_t> values);
Moments moments_f64(std::span<const double> values);
}  // namespace neon
#endif

}  // namespace flowshift::kernels
