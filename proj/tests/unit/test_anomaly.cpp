#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "../support/oracles.hpp"
#include "flowshift/anomaly.hpp"
#include "flowshift/error.hpp"

using namespace flowshift;

namespace {

FlowKey key(int i, std::uint32_t dst = 7) { return {static_cast<std::uint32_t>(1000 + i), dst, 80, proto::tcp}; }

std::vector<KeyVolume> bin_of(const std::vector<std::pair<int, double>>& kv) {
  std::vector<KeyVolume> out;
  for (const auto& [k, v] : kv) out.push_back({key(k), v});
  std::sort(out.begin(), out.end(), [](const KeyVolume& a, const KeyVolume& b) { return a.key < b.key; });
  return out;
}

// A stream of `n` bins with `keys` steady flows; `extra(i)` adds volume on key 0 to bin i.
template <class Extra>
MonitorStream steady_stream(StreamKind kind, std::size_t n, int keys, double base, Extra extra,
                            std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  MonitorStream s;
  s.kind = kind;
  s.volume.assign(n, 0.0);
  s.keys.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < keys; ++k) {
      double v = base * (1.0 + 0.05 * z(rng));
      if (k == 0) v += extra(i);
      s.keys[i].push_back({key(k, static_cast<std::uint32_t>(k == 0 ? 7 : 100 + k)), v});
      s.volume[i] += v;
    }
    std::sort(s.keys[i].begin(), s.keys[i].end(), [](const KeyVolume& a, const KeyVolume& b) { return a.key < b.key; });
  }
  return s;
}

MonitorStream flat_stream(std::size_t n, double rate) {
  MonitorStream s;
  s.volume.assign(n, rate * 300.0);
  s.keys.resize(n);
  return s;
}

}  // namespace

TEST_SUITE("anomaly") {
  TEST_CASE("K matches the formula oracle") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::pair<int, double>> a, b;
      for (int k = 0; k < 30; ++k) {
        if (rng() % 4) a.emplace_back(k, double(rng() % 10000));
        if (rng() % 4) b.emplace_back(k, double(rng() % 10000));
      }
      if (a.size() + b.size() < 2) continue;
      const double want = oracle::equilibrium_k(a, b);
      const double got = equilibrium_statistic(bin_of(a), bin_of(b));
      CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
  }

  TEST_CASE("K edge cases") {
    std::vector<std::pair<int, double>> base;
    for (int k = 0; k < 100; ++k) base.emplace_back(k, 500.0);
    // All keys unchanged.
    CHECK(equilibrium_statistic(bin_of(base), bin_of(base)) == 0.0);
    // Balanced shuffle: one key +X, another -X.
    auto shuffled = base;
    shuffled[3].second += 1e6;
    shuffled[4].second -= 400.0;
    shuffled[5].second -= 1e6 - 400.0;
    CHECK(std::fabs(equilibrium_statistic(bin_of(base), bin_of(shuffled))) < 1e-9);
    // A single key jumping among static keys: K = 1 by the formula, whatever the jump.
    auto jump = base;
    jump[0].second += 1e6;
    CHECK(equilibrium_statistic(bin_of(base), bin_of(jump)) == doctest::Approx(1.0));
    CHECK(equilibrium_statistic(bin_of(base), bin_of(jump)) == doctest::Approx(oracle::equilibrium_k(base, jump)));
    // Every key rising by the same amount: zero spread, nonzero mean.
    auto all_up = base;
    for (auto& [k, v] : all_up) v += 10.0;
    CHECK(equilibrium_statistic(bin_of(base), bin_of(all_up)) == std::numeric_limits<double>::infinity());
    CHECK(equilibrium_statistic(bin_of(all_up), bin_of(base)) == -std::numeric_limits<double>::infinity());
    CHECK(equilibrium_statistic({}, {}) == 0.0);
  }

  TEST_CASE("K is antisymmetric in time and invariant under key relabeling") {
    std::mt19937_64 rng(77);
    std::vector<std::pair<int, double>> a, b, a2, b2;
    for (int k = 0; k < 40; ++k) {
      const double x = double(rng() % 5000), y = double(rng() % 9000);
      a.emplace_back(k, x);
      b.emplace_back(k, y);
      a2.emplace_back(39 - k, x);
      b2.emplace_back(39 - k, y);
    }
    const double k1 = equilibrium_statistic(bin_of(a), bin_of(b));
    CHECK(equilibrium_statistic(bin_of(b), bin_of(a)) == doctest::Approx(-k1));
    CHECK(equilibrium_statistic(bin_of(a2), bin_of(b2)) == doctest::Approx(k1));
  }

  TEST_CASE("a correlated surge opens and closes one interval") {
    // Keys 0..39 all rise together for bins 50..59: a coordinated change.
    MonitorStream s;
    s.volume.assign(120, 0.0);
    s.keys.resize(120);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    for (std::size_t i = 0; i < 120; ++i) {
      for (int k = 0; k < 40; ++k) {
        double v = 1000.0 + 30.0 * z(rng);
        if (i >= 50 && i < 60) v += 5000.0;
        s.keys[i].push_back({key(k), v});
        s.volume[i] += v;
      }
    }
    const auto iv = equilibrium_detect(s);
    REQUIRE(iv.size() == 1);
    CHECK(iv[0] == BinInterval{50, 59});
  }

  TEST_CASE("an onset with no close inside the window stands alone") {
    MonitorStream s;
    s.volume.assign(40, 0.0);
    s.keys.resize(40);
    for (std::size_t i = 0; i < 40; ++i) {
      for (int k = 0; k < 10; ++k) s.keys[i].push_back({key(k), i >= 5 ? 2000.0 + k : 1000.0 + k});
    }
    EquilibriumParams p;
    p.window = 12;
    const auto iv = equilibrium_detect(s, p);
    REQUIRE(iv.size() == 1);
    CHECK(iv[0] == BinInterval{5, 5});
    // With a window long enough the onset runs to the end.
    p.window = 288;
    const auto open = equilibrium_detect(s, p);
    REQUIRE(open.size() == 1);
    CHECK(open[0] == BinInterval{5, 39});
  }

  TEST_CASE("a stream shorter than two bins is insufficient data") {
    MonitorStream s;
    s.volume.assign(1, 0.0);
    s.keys.resize(1);
    CHECK_THROWS_AS(equilibrium_detect(s), Error);
  }

  TEST_CASE("threshold detector with one-bin hysteresis") {
    ThresholdRules rules;
    rules.ntp_bytes_per_s = 1000.0;
    auto s = steady_stream(StreamKind::ntp, 40, 5, 100.0, [](std::size_t i) {
      if (i == 10 || i == 11 || i == 13) return 400000.0;  // 1333 B/s on the victim /24
      if (i == 20 || i == 23) return 400000.0;
      return 0.0;
    });
    const auto iv = threshold_detect(s, rules);
    REQUIRE(iv.size() == 3);
    CHECK(iv[0] == BinInterval{10, 13});
    CHECK(iv[1] == BinInterval{20, 20});
    CHECK(iv[2] == BinInterval{23, 23});
  }

  TEST_CASE("threshold is per destination /24, not the stream total") {
    ThresholdRules rules;
    rules.icmp_pps = 10.0;
    MonitorStream s;
    s.kind = StreamKind::icmp;
    s.volume.assign(3, 0.0);
    s.keys.resize(3);
    for (std::uint32_t d = 0; d < 10; ++d) s.keys[1].push_back({{1, d, 0, proto::icmp}, 2000.0});  // 6.7 pps each
    s.keys[2].push_back({{1, 5, 0, proto::icmp}, 1500.0});
    s.keys[2].push_back({{2, 5, 0, proto::icmp}, 1600.0});  // 10.3 pps on one /24
    const auto iv = threshold_detect(s, rules);
    REQUIRE(iv.size() == 1);
    CHECK(iv[0] == BinInterval{2, 2});
  }

  TEST_CASE("below-threshold traffic raises nothing, a zero rule flags everything with a warning") {
    ThresholdRules rules;
    rules.dns_bytes_per_s = 1000.0;
    const auto s = steady_stream(StreamKind::dns, 30, 3, 150000.0, [](std::size_t) { return 0.0; });
    CHECK(threshold_detect(s, rules).empty());
    rules.dns_bytes_per_s = 0.0;
    std::vector<std::string> warnings;
    const auto all = threshold_detect(s, rules, &warnings);
    REQUIRE(all.size() == 1);
    CHECK(all[0] == BinInterval{0, 29});
    CHECK(warnings.size() == 1);
    CHECK(threshold_detect(flat_stream(10, 1.0), rules).empty());  // overall stream has no rule
  }

  TEST_CASE("expected volume: preceding bin for short events") {
    auto s = flat_stream(3 * 288, 80e6);
    s.volume[400] = 100e6 * 300;
    for (std::size_t i = 401; i <= 402; ++i) s.volume[i] = 900e6 * 300;
    const auto v = expected_volume(s, {401, 402}, {});
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(100e6));
    // An excluded preceding bin falls back to the daily history.
    const std::vector<BinInterval> ex{{400, 400}};
    CHECK(*expected_volume(s, {401, 402}, ex) == doctest::Approx(80e6));
  }

  TEST_CASE("expected volume: same time of day for long events") {
    auto s = flat_stream(7 * 288, 80e6);
    const BinInterval ev{3 * 288 + 100, 3 * 288 + 123};  // two hours
    for (std::size_t i = ev.first; i <= ev.last; ++i) s.volume[i] = 500e6 * 300;
    s.volume[ev.first - 1] = 1.0;  // must not be used for a long event
    const auto v = expected_volume(s, ev, std::vector<BinInterval>{ev});
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(80e6));
    // Contaminated history bins are skipped when excluded.
    s.volume[ev.first - 288] = 1e12;
    const std::vector<BinInterval> ex{ev, {ev.first - 288, ev.first - 288}};
    CHECK(*expected_volume(s, ev, ex) == doctest::Approx(80e6));
  }

  TEST_CASE("expected volume unavailable without clean history") {
    auto s = flat_stream(100, 5.0);
    const BinInterval ev{0, 50};
    CHECK_FALSE(expected_volume(s, ev, {}).has_value());
    auto zero = flat_stream(3 * 288, 0.0);
    CHECK_FALSE(expected_volume(zero, {300, 302}, {}).has_value());
  }

  TEST_CASE("corroboration rule") {
    CHECK(corroborated(true, true, std::nullopt));
    CHECK(corroborated(true, true, 1.0));
    CHECK_FALSE(corroborated(false, true, 1.5));
    CHECK_FALSE(corroborated(true, false, 1.99));
    CHECK(corroborated(true, false, 2.0));
    CHECK(corroborated(false, true, 3.0));
    CHECK_FALSE(corroborated(true, false, std::nullopt));
    CHECK_FALSE(corroborated(false, false, 100.0));
    // Monotone in the detector set.
    for (double z : {0.5, 1.5, 2.0, 10.0}) {
      for (bool e : {false, true}) {
        for (bool t : {false, true}) {
          if (corroborated(e, t, z)) {
            CHECK(corroborated(true, t, z));
            CHECK(corroborated(e, true, z));
          }
        }
      }
    }
  }

  TEST_CASE("corroborate merges detectors and assigns kinds") {
    std::array<MonitorStream, 5> streams;
    for (std::size_t i = 0; i < 5; ++i) {
      streams[i] = flat_stream(2000, 100.0);
      streams[i].kind = kStreamKinds[i];
    }
    // ntp: both detectors on overlapping intervals, small zeta.
    for (std::size_t i = 500; i <= 503; ++i) streams[1].volume[i] = 120.0 * 300;
    // dns: threshold only with zeta 1.5.
    for (std::size_t i = 700; i <= 701; ++i) streams[2].volume[i] = 150.0 * 300;
    // overall: one interval overlapping the ntp event, one on its own with zeta 3.
    for (std::size_t i = 900; i <= 902; ++i) streams[0].volume[i] = 300.0 * 300;
    std::array<StreamCandidates, 5> c;
    c[1].equilibrium = {{500, 502}};
    c[1].threshold = {{501, 503}};
    c[2].threshold = {{700, 701}};
    c[0].equilibrium = {{499, 500}, {900, 902}};
    const auto events = corroborate(streams, c);
    REQUIRE(events.size() == 3);

    CHECK(events[0].kind == AnomalyKind::ntp_amp);
    CHECK(events[0].equilibrium);
    CHECK(events[0].threshold);
    CHECK(events[0].confirmed);
    CHECK(events[0].end - events[0].start == 4 * kAnomalyBin);
    CHECK(*events[0].zeta == doctest::Approx(1.2));

    CHECK(events[1].kind == AnomalyKind::dns_amp);
    CHECK(events[1].threshold);
    CHECK_FALSE(events[1].equilibrium);
    CHECK(*events[1].zeta == doctest::Approx(1.5));
    CHECK_FALSE(events[1].confirmed);

    CHECK(events[2].kind == AnomalyKind::other_bandwidth);
    CHECK(*events[2].zeta == doctest::Approx(3.0));
    CHECK(events[2].confirmed);
    CHECK(*events[2].zeta * *events[2].v_exp == doctest::Approx(events[2].v_peak).epsilon(1e-15));
  }

  TEST_CASE("streams select flows and units") {
    auto f = [](std::uint8_t pr, std::uint16_t sp, std::uint8_t flags) {
      UpsampledFlow x;
      x.proto = pr;
      x.src_port = sp;
      x.tcp_flags = flags;
      x.ts_start = 10 * kAnomalyBin + 5;
      x.bytes = 1000;
      x.packets = 4;
      return x;
    };
    std::vector<UpsampledFlow> flows{f(proto::udp, 123, 0),
                                     f(proto::udp, 53, 0),
                                     f(proto::icmp, 0, 0),
                                     f(proto::tcp, 5000, tcp_flag::syn),
                                     f(proto::tcp, 80, tcp_flag::syn | tcp_flag::ack),
                                     f(proto::tcp, 80, tcp_flag::ack),
                                     f(proto::tcp, 123, 0)};
    const auto s = build_streams(flows, 10 * kAnomalyBin, 12 * kAnomalyBin);
    CHECK(s[0].size() == 2);
    CHECK(s[0].volume[0] == 7000.0);
    CHECK(s[1].volume[0] == 1000.0);
    CHECK(s[2].volume[0] == 1000.0);
    CHECK(s[3].volume[0] == 4.0);
    CHECK(s[4].volume[0] == 8.0);
    CHECK(s[0].volume[1] == 0.0);
    CHECK(s[0].rate(0) == doctest::Approx(7000.0 / 300.0));
  }

  TEST_CASE("event lines") {
    AnomalyEvent e;
    e.kind = AnomalyKind::syn_flood;
    e.start = parse_timestamp("2020-03-20T10:00:00Z");
    e.end = parse_timestamp("2020-03-20T10:20:00Z");
    e.threshold = true;
    e.v_peak = 4.0;
    std::ostringstream out;
    write_event_json(out, e);
    CHECK(out.str() ==
          "{\"kind\":\"syn_flood\",\"start\":\"2020-03-20T10:00:00.000Z\",\"end\":\"2020-03-20T10:20:00.000Z\","
          "\"detectors\":[\"threshold\"],\"v_peak\":4.0,\"v_exp\":null,\"zeta\":null,\"confirmed\":false}\n");
  }

  TEST_CASE("anomaly change table") {
    StudyCalendar cal;
    cal.before = {{2020, 3, 2}, {2020, 3, 8}};
    cal.transition = {{2020, 3, 9}, {2020, 3, 10}};
    cal.after = {{2020, 3, 11}, {2020, 3, 24}};
    cal.timezone_offset = 0;
    auto ev = [](AnomalyKind k, const char* start, int minutes, double zeta, bool confirmed = true) {
      AnomalyEvent e;
      e.kind = k;
      e.start = parse_timestamp(start);
      e.end = e.start + minutes * kMinute;
      e.zeta = zeta;
      e.confirmed = confirmed;
      return e;
    };
    const std::vector<AnomalyEvent> events{
        ev(AnomalyKind::ntp_amp, "2020-03-03T01:00:00Z", 10, 4.0),
        ev(AnomalyKind::ntp_amp, "2020-03-05T01:00:00Z", 30, 6.0),
        ev(AnomalyKind::ntp_amp, "2020-03-12T01:00:00Z", 20, 10.0),
        ev(AnomalyKind::ntp_amp, "2020-03-14T01:00:00Z", 20, 10.0),
        ev(AnomalyKind::ntp_amp, "2020-03-16T01:00:00Z", 20, 10.0),
        ev(AnomalyKind::ntp_amp, "2020-03-18T01:00:00Z", 20, 10.0),
        ev(AnomalyKind::ntp_amp, "2020-03-20T01:00:00Z", 20, 10.0, false),
        ev(AnomalyKind::icmp_flood, "2020-03-12T01:00:00Z", 5, 3.0),
        ev(AnomalyKind::dns_amp, "2020-03-09T01:00:00Z", 5, 3.0),
    };
    const auto rows = anomaly_change_table(events, cal);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].kind == AnomalyKind::ntp_amp);
    CHECK(rows[0].before_count == 2);
    CHECK(rows[0].after_count == 4);
    CHECK(rows[0].before_per_day == doctest::Approx(2.0 / 7.0));
    CHECK(rows[0].after_per_day == doctest::Approx(4.0 / 14.0));
    CHECK(*rows[0].frequency_ratio == doctest::Approx(1.0));
    CHECK(rows[0].before_duration_min == doctest::Approx(20.0));
    CHECK(*rows[0].duration_ratio == doctest::Approx(1.0));
    CHECK(*rows[0].zeta_ratio == doctest::Approx(2.0));
    CHECK(rows[1].kind == AnomalyKind::icmp_flood);
    CHECK_FALSE(rows[1].frequency_ratio.has_value());
    CHECK_FALSE(rows[1].zeta_ratio.has_value());
    CHECK(anomaly_change_table({}, cal).empty());
  }

  TEST_CASE("frequency ratio follows the planted schedule") {
    StudyCalendar cal;
    cal.before = {{2020, 2, 3}, {2020, 3, 1}};
    cal.transition = {{2020, 3, 2}, {2020, 3, 8}};
    cal.after = {{2020, 3, 9}, {2020, 4, 5}};
    cal.timezone_offset = 0;
    std::vector<AnomalyEvent> events;
    auto add = [&](const Date& week_start, int per_week) {
      for (int i = 0; i < per_week; ++i) {
        AnomalyEvent e;
        e.kind = AnomalyKind::ntp_amp;
        e.start = cal.day_start_utc(week_start) + i * kDay + 3 * kHour;
        e.end = e.start + 20 * kMinute;
        e.zeta = 5.0;
        e.confirmed = true;
        events.push_back(e);
      }
    };
    for (int w = 0; w < 4; ++w) add(date_from_days(days_since_epoch({2020, 2, 3}) + 7 * w), 2);
    for (int w = 0; w < 4; ++w) add(date_from_days(days_since_epoch({2020, 3, 9}) + 7 * w), 5);
    const auto rows = anomaly_change_table(events, cal);
    REQUIRE(rows.size() == 1);
    CHECK(*rows[0].frequency_ratio == doctest::Approx(2.5));
    CHECK(*rows[0].zeta_ratio == doctest::Approx(1.0));
  }
}
