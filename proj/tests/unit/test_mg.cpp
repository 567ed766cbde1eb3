#include <doctest.h>

#include <random>
#include <sstream>

#include "flowshift/error.hpp"
#include "flowshift/mg.hpp"

using namespace flowshift;
using namespace flowshift::mg;

namespace {

DirectedFlow flow(Ipv4 src, std::uint16_t sp, Ipv4 dst, std::uint16_t dp, Millis t,
                  std::uint8_t pr = proto::udp) {
  DirectedFlow f;
  f.proto = pr;
  f.src_ip = src;
  f.dst_ip = dst;
  f.src_port = sp;
  f.dst_port = dp;
  f.ts_start = f.ts_end = t;
  f.packets = 10;
  f.bytes = 1000;
  return f;
}

// Clients talk to one server prefix on ports drawn from `ports` for `hours` hours.
void emit_server(std::vector<DirectedFlow>& out, PrefixId server, const std::vector<std::uint16_t>& ports,
                 int hours, int per_hour, std::mt19937_64& rng) {
  for (int h = 0; h < hours; ++h) {
    for (int i = 0; i < per_hour; ++i) {
      const Ipv4 c = parse_ipv4("10.0.0.0") + static_cast<Ipv4>(rng() % 65536);
      const Ipv4 s = server.base() + 1 + static_cast<Ipv4>(rng() % 20);
      out.push_back(flow(c, static_cast<std::uint16_t>(32768 + rng() % 28000), s, ports[rng() % ports.size()],
                         h * kHour + static_cast<Millis>(rng() % kHour)));
    }
  }
}

}  // namespace

TEST_SUITE("mg") {
  TEST_CASE("ground-truth blocks expand to /24s") {
    std::istringstream in("app,cidr\nzoom,3.7.34.0/23\nwebex,3.7.35.0/24\nskype,4.4.4.128/26\nmystery,1.2.3.0/24\n");
    const auto gt = expand_ground_truth(in);
    REQUIRE(gt.prefixes.size() == 3);
    CHECK(gt.prefixes[0] == std::pair{PrefixId::parse("3.7.34.0/24"), AppLabel::zoom});
    CHECK(gt.prefixes[1] == std::pair{PrefixId::parse("3.7.35.0/24"), AppLabel::zoom});
    CHECK(gt.prefixes[2] == std::pair{PrefixId::parse("4.4.4.0/24"), AppLabel::skype});
    CHECK(gt.warnings.size() == 2);  // unknown app, conflicting claim
    const std::vector<std::pair<AppLabel, Cidr>> wide{{AppLabel::steam, Cidr::parse("5.0.0.0/20")}};
    CHECK(expand_ground_truth(wide).prefixes.size() == 16);
  }

  TEST_CASE("ground-truth ports with ranges") {
    std::istringstream in("app,proto,port\nzoom,udp,8801-8810\nzoom,tcp,443\n");
    const auto p = GroundTruthPorts::read(in);
    CHECK(p.matches_any(proto::udp, 8801));
    CHECK(p.matches_any(proto::udp, 8810));
    CHECK_FALSE(p.matches_any(proto::udp, 8811));
    CHECK_FALSE(p.matches_any(proto::tcp, 8805));
    CHECK(p.matches_any(proto::tcp, 443));
    std::istringstream bad("zoom,udp,9000-8000\n");
    CHECK_THROWS_AS(GroundTruthPorts::read(bad), Error);
  }

  TEST_CASE("vectors need at least the minimum flow count") {
    const auto server = PrefixId::parse("50.0.0.0/24");
    std::vector<DirectedFlow> flows;
    for (int i = 0; i < 49; ++i) flows.push_back(flow(parse_ipv4("10.0.0.1"), 40000, server.base() + 1, 8801, i));
    for (int i = 0; i < 50; ++i) {
      flows.push_back(flow(parse_ipv4("10.0.0.1"), 40000, server.base() + 1, 8801, kHour + i));
    }
    const auto v = extract_vectors(flows, {server});
    REQUIRE(v.size() == 1);
    CHECK(v[0].hour == 1);
    CHECK(v[0].flow_count == 50);
  }

  TEST_CASE("vectors keep the most frequent prefix-side ports, ascending and zero padded") {
    const auto server = PrefixId::parse("50.0.0.0/24");
    std::vector<DirectedFlow> flows;
    const std::uint16_t ports[] = {9000, 8801, 443, 3478};
    const int counts[] = {40, 30, 20, 10};
    for (int k = 0; k < 4; ++k) {
      for (int i = 0; i < counts[k]; ++i) {
        flows.push_back(flow(parse_ipv4("10.0.0.1"), static_cast<std::uint16_t>(40000 + i), server.base() + 2,
                             ports[k], i));
      }
    }
    const auto v = extract_vectors(flows, {server}, 3, 50);
    REQUIRE(v.size() == 1);
    CHECK(v[0].ports == std::vector<std::uint16_t>{443, 8801, 9000});
    const auto wide = extract_vectors(flows, {server}, 6, 50);
    CHECK(wide[0].ports == std::vector<std::uint16_t>{0, 0, 443, 3478, 8801, 9000});
    CHECK(wide[0].features().size() == 7);
    CHECK(wide[0].features().back() == 100.0);
  }

  TEST_CASE("tree separates distinct port profiles and round-trips") {
    std::mt19937_64 rng(9);
    std::vector<DirectedFlow> flows;
    const auto zoom = PrefixId::parse("50.0.1.0/24"), webex = PrefixId::parse("50.0.2.0/24");
    emit_server(flows, zoom, {8801, 8802, 8803, 443}, 40, 80, rng);
    emit_server(flows, webex, {9000, 5004, 443}, 40, 80, rng);
    auto vectors = extract_vectors(flows, {zoom, webex});
    for (auto& v : vectors) v.label = v.prefix == zoom ? AppLabel::zoom : AppLabel::webex;
    const auto res = train(vectors, 0.5, 1);
    CHECK(res.report.test_accuracy == 1.0);
    CHECK(res.report.train_size + res.report.test_size == vectors.size());
    std::stringstream ss;
    res.tree.serialize(ss);
    const auto back = DecisionTree::deserialize(ss);
    CHECK(back.node_count() == res.tree.node_count());
    for (const auto& v : vectors) CHECK(back.predict(v).label == *v.label);
    const auto vote = label_prefix(res.tree, std::span(vectors).first(10));
    CHECK(vote.label == *vectors[0].label);
    CHECK(vote.vote_fraction == 1.0);
    CHECK(vote.votes == 10);
  }

  TEST_CASE("a single label cannot train") {
    std::vector<PortVector> v(10);
    for (auto& x : v) {
      x.ports = {1, 2};
      x.label = AppLabel::zoom;
    }
    CHECK_THROWS_AS(train(v, 0.5, 1), Error);
  }

  TEST_CASE("candidates use a ground-truth port against a dynamic peer port") {
    std::istringstream in("zoom,udp,8801-8810\n");
    const auto gp = GroundTruthPorts::read(in);
    const auto known = PrefixId::parse("50.0.0.0/24");
    std::vector<DirectedFlow> flows{
        flow(parse_ipv4("10.0.0.1"), 40000, parse_ipv4("60.0.0.1"), 8801, 0),
        flow(parse_ipv4("61.0.0.1"), 8805, parse_ipv4("10.0.0.1"), 40000, 0),
        flow(parse_ipv4("10.0.0.1"), 500, parse_ipv4("62.0.0.1"), 8801, 0),
        flow(parse_ipv4("10.0.0.1"), 40000, parse_ipv4("63.0.0.1"), 8801, 0, proto::tcp),
        flow(parse_ipv4("10.0.0.1"), 40000, known.base() + 1, 8801, 0),
    };
    const auto c = find_candidates(flows, gp, {known});
    CHECK(c == std::set<PrefixId>{PrefixId::parse("60.0.0.0/24"), PrefixId::parse("61.0.0.0/24")});
  }

  TEST_CASE("ownership pruning matches partner names") {
    const std::vector<PrefixDirectory::Row> rows{
        {Cidr::parse("70.0.0.0/24"), "z", "Zoom Video Communications", OrgCategory::business},
        {Cidr::parse("71.0.0.0/24"), "c", "Colo Co", OrgCategory::hosting}};
    const auto dir = PrefixDirectory::build(rows, {});
    std::map<PrefixId, PrefixLabel> labeled{{PrefixId::parse("70.0.0.0/24"), {AppLabel::zoom, 1.0, 5}},
                                            {PrefixId::parse("71.0.0.0/24"), {AppLabel::zoom, 1.0, 5}}};
    const auto r = prune_by_ownership(labeled, dir, BusinessRelations::defaults());
    REQUIRE(r.kept.size() == 1);
    CHECK(r.kept[0].first == PrefixId::parse("70.0.0.0/24"));
    CHECK(r.pruned.size() == 1);
    CHECK(BusinessRelations::defaults().consistent(AppLabel::webex, "CISCO SYSTEMS"));
    CHECK_FALSE(BusinessRelations::defaults().consistent(AppLabel::steam, "Valve"));
    std::istringstream rel("steam,Valve\n");
    CHECK(BusinessRelations::read(rel).consistent(AppLabel::steam, "Valve Corp"));
  }
}
