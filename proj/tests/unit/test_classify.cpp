#include <doctest.h>

#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "flowshift/classify.hpp"
#include "flowshift/error.hpp"

using namespace flowshift;

namespace {

DirectedFlow flow(std::uint16_t sport, std::uint16_t dport, std::uint8_t pr = proto::tcp,
                  std::uint8_t flags = tcp_flag::ack) {
  DirectedFlow f;
  f.proto = pr;
  f.tcp_flags = flags;
  f.src_ip = parse_ipv4("10.0.0.5");
  f.dst_ip = parse_ipv4("20.0.0.5");
  f.src_port = sport;
  f.dst_port = dport;
  return f;
}

// Independent statement of the labeling rules over the default port lists.
std::optional<AppLabel> expected_label(std::uint16_t s, std::uint16_t d) {
  static const std::map<std::uint16_t, AppLabel> ports = [] {
    std::map<std::uint16_t, AppLabel> m;
    for (auto p : {80, 81, 82, 8080, 8090}) m[p] = AppLabel::web;
    for (auto p : {443, 4433}) m[p] = AppLabel::https;
    for (auto p : {4500, 4501, 4502}) m[p] = AppLabel::vpn;
    for (auto p : {25, 110, 995, 143, 993, 2525, 465}) m[p] = AppLabel::email;
    for (auto p : {20, 21}) m[p] = AppLabel::ftp;
    m[23] = AppLabel::telnet;
    m[22] = AppLabel::ssh;
    m[388] = AppLabel::unidata;
    m[873] = AppLabel::rsync;
    m[5201] = AppLabel::perfsonar;
    m[53] = AppLabel::dns;
    m[123] = AppLabel::ntp;
    return m;
  }();
  auto service = [&](std::uint16_t p) { return p <= 1023 || ports.contains(p); };
  const bool sl = ports.contains(s), dl = ports.contains(d);
  if (sl && !dl && d > 1023) return ports.at(s);
  if (dl && !sl && s > 1023) return ports.at(d);
  if (s > 10000 && d > 10000) return AppLabel::highhigh;
  if (service(s) && service(d)) return AppLabel::twoservice;
  if (!service(s) && !service(d)) return AppLabel::noservice;
  return std::nullopt;
}

}  // namespace

TEST_SUITE("classify") {
  TEST_CASE("coarse classes") {
    CHECK(coarse_class(flow(0, 0, proto::icmp, 0)) == CoarseClass::icmp);
    CHECK(coarse_class(flow(0, 0, 41, 0)) == CoarseClass::otprot);
    CHECK(coarse_class(flow(0, 0, 47, 0)) == CoarseClass::otprot);
    CHECK(coarse_class(flow(50000, 80, proto::tcp, tcp_flag::syn)) == CoarseClass::syn);
    CHECK(coarse_class(flow(50000, 80, proto::tcp, tcp_flag::syn | tcp_flag::ack)) == CoarseClass::candidate);
    CHECK(coarse_class(flow(50000, 80, proto::tcp, tcp_flag::syn | tcp_flag::fin)) == CoarseClass::candidate);
    CHECK(coarse_class(flow(50000, 53, proto::udp, 0)) == CoarseClass::candidate);
    CHECK(coarse_class(flow(50000, 80, proto::udp, tcp_flag::syn)) == CoarseClass::candidate);
  }

  TEST_CASE("label rule table") {
    const auto pm = PortMap::defaults();
    const auto svc = pm.service_ports();
    struct Case {
      std::uint16_t s, d;
      std::optional<AppLabel> want;
    };
    const Case cases[] = {
        {50000, 443, AppLabel::https},      {443, 50000, AppLabel::https},
        {443, 80, AppLabel::twoservice},    {22, 1000, AppLabel::twoservice},
        {20000, 30000, AppLabel::highhigh}, {5555, 6000, AppLabel::noservice},
        {5555, 80, AppLabel::web},          {5555, 1000, std::nullopt},
        {12000, 4500, AppLabel::vpn},       {4500, 4501, AppLabel::twoservice},
        {20000, 4433, AppLabel::https},     {10001, 10000, AppLabel::noservice},
        {10001, 10002, AppLabel::highhigh}, {1024, 22, AppLabel::ssh},
        {1023, 22, AppLabel::twoservice},   {179, 179, AppLabel::twoservice},
    };
    for (const auto& c : cases) {
      CAPTURE(c.s);
      CAPTURE(c.d);
      CHECK(app_label(flow(c.s, c.d), pm, svc, nullptr) == c.want);
    }
  }

  TEST_CASE("label rules agree with an independent statement on random ports") {
    const auto pm = PortMap::defaults();
    const auto svc = pm.service_ports();
    std::mt19937_64 rng(5);
    const std::uint16_t interesting[] = {0,    22,   53,   80,   123,  443,  1023, 1024, 4433, 4500,
                                         5201, 8080, 9999, 10000, 10001, 27015, 65535};
    for (int i = 0; i < 200000; ++i) {
      auto pick = [&]() -> std::uint16_t {
        if (rng() % 3 == 0) return interesting[rng() % std::size(interesting)];
        return static_cast<std::uint16_t>(rng());
      };
      const auto s = pick(), d = pick();
      if (app_label(flow(s, d), pm, svc, nullptr) != expected_label(s, d)) {
        CAPTURE(s);
        CAPTURE(d);
        FAIL("mismatch");
      }
    }
  }

  TEST_CASE("known mg prefixes take precedence") {
    const auto pm = PortMap::defaults();
    const auto svc = pm.service_ports();
    KnownMgPrefixes mg;
    mg.add_ground_truth(PrefixId::parse("20.0.0.0/24"), AppLabel::zoom);
    auto f = flow(50000, 443);
    CHECK(app_label(f, pm, svc, &mg) == AppLabel::zoom);
    f.src_is_server_like = true;
    CHECK(app_label(f, pm, svc, &mg) == AppLabel::zoom);
    f.dst_ip = parse_ipv4("30.0.0.1");
    CHECK(app_label(f, pm, svc, &mg) == AppLabel::https);
  }

  TEST_CASE("classify_flow only labels candidates") {
    const auto pm = PortMap::defaults();
    const auto svc = pm.service_ports();
    const auto syn = classify_flow(flow(50000, 443, proto::tcp, tcp_flag::syn), pm, svc, nullptr);
    CHECK(syn.coarse == CoarseClass::syn);
    CHECK_FALSE(syn.label.has_value());
    const auto c = classify_flow(flow(50000, 443), pm, svc, nullptr);
    CHECK(c.coarse == CoarseClass::candidate);
    CHECK(c.label == AppLabel::https);
  }

  TEST_CASE("port map configuration") {
    std::istringstream in("# site overrides\nssh: 22, 2222\nweb:80\n");
    const auto pm = PortMap::from_config(in);
    CHECK(pm.label_for(2222) == AppLabel::ssh);
    CHECK_FALSE(pm.label_for(8080).has_value());
    CHECK(pm.label_for(443) == AppLabel::https);
    CHECK(pm.service_ports().contains(2222));
    std::istringstream clash("ssh:443\n");
    CHECK_THROWS_AS(PortMap::from_config(clash), Error);
    std::istringstream mg("zoom:8801\n");
    CHECK_THROWS_AS(PortMap::from_config(mg), Error);
    std::istringstream bad("ssh:70000\n");
    CHECK_THROWS_AS(PortMap::from_config(bad), Error);
  }

  TEST_CASE("label names") {
    for (auto l : kAppLabels) CHECK(parse_label(to_string(l)) == l);
    for (auto c : kCoarseClasses) CHECK(parse_coarse(to_string(c)) == c);
    CHECK(parse_label("gotomeeting") == AppLabel::go_to);
    CHECK_FALSE(parse_label("gopher").has_value());
  }
}
