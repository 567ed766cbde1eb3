#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace flowshift {

using Ipv4 = std::uint32_t;

Ipv4 parse_ipv4(std::string_view text);
std::string format_ipv4(Ipv4 addr);

// An anonymized /24: the unit of attribution, classification and liveness.
class PrefixId {
 public:
  constexpr PrefixId() = default;
  static constexpr PrefixId of(Ipv4 addr) { return PrefixId(addr & 0xFFFFFF00u); }

  constexpr Ipv4 base() const { return base_; }
  constexpr std::uint32_t key() const { return base_ >> 8; }
  static constexpr PrefixId from_key(std::uint32_t key) { return PrefixId(key << 8); }

  // "a.b.c.0/24"
  std::string to_string() const;
  // Accepts "a.b.c.d/24" or a bare address; host bits are cleared.
  static PrefixId parse(std::string_view text);

  constexpr auto operator<=>(const PrefixId&) const = default;

 private:
  constexpr explicit PrefixId(Ipv4 base) : base_(base) {}
  Ipv4 base_ = 0;
};

// A CIDR block of arbitrary length.
struct Cidr {
  Ipv4 network = 0;
  int length = 32;

  static Cidr parse(std::string_view text);
  std::string to_string() const;
};

}  // namespace flowshift

template <>
struct std::hash<flowshift::PrefixId> {
  std::size_t operator()(const flowshift::PrefixId& p) const noexcept {
    return std::hash<std::uint32_t>{}(p.base());
  }
};
