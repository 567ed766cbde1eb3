#include <doctest.h>

#include <random>
#include <sstream>

#include "flowshift/error.hpp"
#include "flowshift/flow.hpp"

using namespace flowshift;

namespace {

FlowRecord record(std::uint64_t packets, std::uint64_t bytes, std::uint32_t rate) {
  FlowRecord r;
  r.ts_start = parse_timestamp("2020-03-02T10:00:00Z");
  r.ts_end = r.ts_start + 1000;
  r.proto = proto::tcp;
  r.src_ip = parse_ipv4("10.0.0.1");
  r.dst_ip = parse_ipv4("10.0.1.1");
  r.src_port = 50000;
  r.dst_port = 443;
  r.sampled_packets = packets;
  r.sampled_bytes = bytes;
  r.sampling_rate = rate;
  return r;
}

}  // namespace

TEST_SUITE("flow") {
  TEST_CASE("up-sampling multiplies by the sampling rate") {
    const auto a = upsample(record(13, 18000, 100));
    CHECK(a.packets == 1300);
    CHECK(a.bytes == 1800000);
    const auto b = upsample(record(2, 2500, 4096));
    CHECK(b.packets == 8192);
    CHECK(b.bytes == 10240000);
    const auto c = upsample(record(5, 700, 1));
    CHECK(c.packets == 5);
    CHECK(c.bytes == 700);
  }

  TEST_CASE("batch up-sampling matches the per-record form") {
    std::mt19937_64 rng(3);
    std::vector<FlowRecord> recs;
    for (int i = 0; i < 1003; ++i) {
      const auto p = 1 + rng() % 1000;
      recs.push_back(record(p, p * (40 + rng() % 1460), static_cast<std::uint32_t>(1 + rng() % 8192)));
    }
    const auto batch = upsample(recs);
    REQUIRE(batch.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(batch[i] == upsample(recs[i]));
  }

  TEST_CASE("flow CSV round-trip") {
    std::vector<FlowRecord> recs{record(13, 18000, 100), record(2, 2500, 4096)};
    recs[1].proto = proto::udp;
    recs[1].tcp_flags = 0;
    std::stringstream ss;
    write_flows(ss, recs);
    const auto parsed = parse_flows(ss);
    CHECK(parsed.errors.empty());
    CHECK(parsed.flows == recs);
  }

  TEST_CASE("malformed lines are collected with line numbers") {
    std::stringstream ss;
    ss << kFlowCsvHeader << '\n'
       << "2020-03-02T10:00:00Z,2020-03-02T10:00:01Z,6,10.0.0.1,5,10.0.0.2,443,1,60,2,100\n"
       << "garbage\n"
       << "2020-03-02T10:00:00Z,2020-03-02T10:00:01Z,6,10.0.0.1,5,10.0.0.2,443,1,60,2,0\n"
       << "2020-03-02T10:00:00Z,2020-03-02T10:00:01Z,99,10.0.0.1,5,10.0.0.2,443,1,60,0,100\n"
       << "2020-03-02T10:00:05Z,2020-03-02T10:00:01Z,6,10.0.0.1,5,10.0.0.2,443,1,60,2,100\n";
    const auto res = parse_flows(ss);
    REQUIRE(res.flows.size() == 2);
    CHECK(res.flows[1].proto == 99);
    REQUIRE(res.errors.size() == 3);
    CHECK(res.errors[0].line == 3);
    CHECK(res.errors[1].line == 4);
    CHECK(res.errors[2].line == 6);
  }

  TEST_CASE("strict mode throws on the first malformed line") {
    std::stringstream ss;
    ss << kFlowCsvHeader << "\nnot,a,flow\n";
    IngestConfig cfg;
    cfg.strict = true;
    CHECK_THROWS_AS(parse_flows(ss, cfg), Error);
  }

  TEST_CASE("undeclared sampling rates are rejected") {
    IngestConfig cfg;
    cfg.declared_rates = {100};
    const std::string line = "2020-03-02T10:00:00Z,2020-03-02T10:00:01Z,6,10.0.0.1,5,10.0.0.2,443,1,60,2,";
    CHECK_NOTHROW(parse_flow_line(line + "100", cfg));
    CHECK_THROWS_AS(parse_flow_line(line + "4096", cfg), Error);
  }

  TEST_CASE("missing header is reported") {
    std::stringstream ss("a,b\n");
    const auto res = parse_flows(ss);
    CHECK(res.flows.empty());
    REQUIRE(res.errors.size() == 1);
    CHECK(res.errors[0].line == 1);
  }

  TEST_CASE("empty input yields nothing") {
    std::stringstream ss;
    const auto res = parse_flows(ss);
    CHECK(res.flows.empty());
    CHECK(res.errors.empty());
  }

  TEST_CASE("binning by start time") {
    auto f = upsample(record(1, 100, 10));
    const auto bins = bin_volume(std::span(&f, 1), BinWidth::five_min);
    REQUIRE(bins.size() == 1);
    CHECK(bins.begin()->first == floor_div(f.ts_start, 5 * kMinute));
    CHECK(bins.begin()->second == BinVolume{1000, 10, 1});
  }

  TEST_CASE("proportional binning conserves totals exactly") {
    std::mt19937_64 rng(11);
    std::vector<UpsampledFlow> flows;
    for (int i = 0; i < 500; ++i) {
      auto r = record(1 + rng() % 50, 0, 1 + static_cast<std::uint32_t>(rng() % 1000));
      r.sampled_bytes = r.sampled_packets * (40 + rng() % 1460);
      r.ts_start += static_cast<Millis>(rng() % kDay);
      r.ts_end = r.ts_start + static_cast<Millis>(rng() % (3 * kHour));
      flows.push_back(upsample(r));
    }
    std::uint64_t bytes = 0, packets = 0;
    for (const auto& f : flows) {
      bytes += f.bytes;
      packets += f.packets;
    }
    for (auto w : {BinWidth::five_min, BinWidth::hour, BinWidth::day}) {
      const auto bins = bin_volume(flows, w, BinAssign::proportional);
      BinVolume total;
      for (const auto& [i, v] : bins) total += v;
      CHECK(total.bytes == bytes);
      CHECK(total.packets == packets);
      CHECK(total.flow_count == flows.size());
    }
  }

  TEST_CASE("proportional split follows overlap") {
    UpsampledFlow f;
    f.ts_start = 4 * kMinute;
    f.ts_end = 6 * kMinute;
    f.bytes = 1001;
    f.packets = 3;
    const auto bins = bin_volume(std::span(&f, 1), BinWidth::five_min, BinAssign::proportional);
    REQUIRE(bins.size() == 2);
    CHECK(bins.at(0).bytes == 501);
    CHECK(bins.at(1).bytes == 500);
    CHECK(bins.at(0).packets + bins.at(1).packets == 3);
    CHECK(bins.at(0).flow_count == 1);
    CHECK(bins.at(1).flow_count == 0);
  }

  TEST_CASE("merging partitioned bins equals binning the whole") {
    std::vector<UpsampledFlow> flows;
    for (int i = 0; i < 40; ++i) {
      auto r = record(1 + i, 100 * (i + 1), 10);
      r.ts_start += i * 7 * kMinute;
      r.ts_end = r.ts_start + 11 * kMinute;
      flows.push_back(upsample(r));
    }
    const auto whole = bin_volume(flows, BinWidth::five_min, BinAssign::proportional);
    auto merged = bin_volume(std::span(flows).first(17), BinWidth::five_min, BinAssign::proportional);
    merge_into(merged, bin_volume(std::span(flows).subspan(17), BinWidth::five_min, BinAssign::proportional));
    CHECK(merged == whole);
  }
}
