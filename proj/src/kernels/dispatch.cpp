#include <cstdlib>
#include <cstring>

#include "flowshift/kernels.hpp"

namespace flowshift::kernels {
namespace {

Isa detect() {
  if (const char* force = std::getenv("FLOWSHIFT_FORCE_SCALAR"); force && std::strcmp(force, "0") != 0) {
    return Isa::scalar;
  }
  if (isa_available(Isa::avx2)) return Isa::avx2;
  if (isa_available(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
    case Isa::scalar: break;
  }
  return "scalar";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() {
  static const Isa isa = detect();
  return isa;
}

void scale_u64(std::span<const std::uint64_t> values, std::span<const std::uint32_t> factors,
               std::span<std::uint64_t> out) {
  switch (active_isa()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return avx2::scale_u64(values, factors, out);
#endif
#if defined(__aarch64__)
    case Isa::neon: return neon::scale_u64(values, factors, out);
#endif
    default: return scalar::scale_u64(values, factors, out);
  }
}

std::uint64_t sum_u64(std::span<const std::uint64_t> values) {
  switch (active_isa()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return avx2::sum_u64(values);
#endif
#if defined(__aarch64__)
    case Isa::neon: return neon::sum_u64(values);
#endif
    default: return scalar::sum_u64(values);
  }
}

Moments moments_f64(std::span<const double> values) {
  switch (active_isa()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return avx2::moments_f64(values);
#endif
#if defined(__aarch64__)
    case Isa::neon: return neon::moments_f64(values);
#endif
    default: return scalar::moments_f64(values);
  }
}

}  // namespace flowshift::kernels
