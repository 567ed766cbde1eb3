#include "flowshift/net.hpp"

#include <charconv>

#include "flowshift/error.hpp"

namespace flowshift {

Ipv4 parse_ipv4(std::string_view text) {
  Ipv4 addr = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    unsigned value = 0;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc() || next == p || value > 255) {
      throw input_error("malformed IPv4 address '" + std::string(text) + "'");
    }
    addr = (addr << 8) | value;
    p = next;
    if (octet < 3) {
      if (p == end || *p != '.') throw input_error("malformed IPv4 address '" + std::string(text) + "'");
      ++p;
    }
  }
  if (p != end) throw input_error("malformed IPv4 address '" + std::string(text) + "'");
  return addr;
}

std::string format_ipv4(Ipv4 addr) {
  return std::to_string(addr >> 24) + '.' + std::to_string((addr >> 16) & 0xFF) + '.' +
         std::to_string((addr >> 8) & 0xFF) + '.' + std::to_string(addr & 0xFF);
}

std::string PrefixId::to_string() const { return format_ipv4(base_) + "/24"; }

PrefixId PrefixId::parse(std::string_view text) {
  auto slash = text.find('/');
  if (slash != std::string_view::npos) {
    Cidr c = Cidr::parse(text);
    if (c.length < 24) throw input_error("expected a /24 (or longer) prefix, got '" + std::string(text) + "'");
    return PrefixId::of(c.network);
  }
  return PrefixId::of(parse_ipv4(text));
}

Cidr Cidr::parse(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return Cidr{parse_ipv4(text), 32};
  Cidr c;
  c.network = parse_ipv4(text.substr(0, slash));
  auto len = text.substr(slash + 1);
  auto [ptr, ec] = std::from_chars(len.data(), len.data() + len.size(), c.length);
  if (ec != std::errc() || ptr != len.data() + len.size() || c.length < 0 || c.length > 32) {
    throw input_error("malformed CIDR '" + std::string(text) + "'");
  }
  Ipv4 mask = c.length == 0 ? 0 : ~Ipv4{0} << (32 - c.length);
  c.network &= mask;
  return c;
}

std::string Cidr::to_string() const { return format_ipv4(network) + '/' + std::to_string(length); }

}  // namespace flowshift
