#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "flowshift/change.hpp"
#include "flowshift/error.hpp"
#include "flowshift/store.hpp"

using namespace flowshift;

namespace {

// One week before, two transition days, one week after; UTC so bins are easy to reason about.
StudyCalendar short_calendar() {
  StudyCalendar cal;
  cal.before = {{2020, 3, 2}, {2020, 3, 8}};
  cal.transition = {{2020, 3, 9}, {2020, 3, 10}};
  cal.after = {{2020, 3, 11}, {2020, 3, 17}};
  cal.timezone_offset = 0;
  return cal;
}

PrefixDirectory directory() {
  const std::vector<PrefixDirectory::Row> rows{
      {Cidr::parse("10.0.0.0/16"), "uni", "University", OrgCategory::education},
      {Cidr::parse("20.0.0.0/16"), "cloud", "Cloud", OrgCategory::hosting},
      {Cidr::parse("30.0.0.0/16"), "home", "Home ISP", OrgCategory::isp}};
  std::vector<PrefixId> local;
  for (int i = 0; i < 4; ++i) local.push_back(PrefixId::parse("10.0." + std::to_string(i) + ".0/24"));
  return PrefixDirectory::build(rows, local);
}

UpsampledFlow flow(Millis t, const char* src, std::uint16_t sp, const char* dst, std::uint16_t dp, std::uint64_t bytes,
                   std::uint8_t pr = proto::tcp, std::uint8_t flags = tcp_flag::ack) {
  UpsampledFlow f;
  f.ts_start = f.ts_end = t;
  f.proto = pr;
  f.tcp_flags = flags;
  f.src_ip = parse_ipv4(src);
  f.dst_ip = parse_ipv4(dst);
  f.src_port = sp;
  f.dst_port = dp;
  f.bytes = bytes;
  f.packets = std::max<std::uint64_t>(1, bytes / 1000);
  f.sampled_packets = 1;
  f.sampled_bytes = bytes;
  return f;
}

}  // namespace

TEST_SUITE("change") {
  TEST_CASE("five-minute series cover the window and respect the hours filter") {
    const auto cal = short_calendar();
    const std::map<std::int64_t, double> vol{{floor_div(parse_timestamp("2020-03-02T09:00:00Z"), 5 * kMinute), 7.0}};
    const auto all = five_min_series(vol, cal, HoursFilter::all);
    CHECK(all.points.size() == 16 * 288);
    const auto work = five_min_series(vol, cal, HoursFilter::work);
    // 12 weekdays in the window, 9 work hours each.
    CHECK(work.points.size() == 12 * 9 * 12);
    double sum = 0.0;
    for (const auto& p : work.points) sum += p.value;
    CHECK(sum == 7.0);
    const auto rest = five_min_series(vol, cal, HoursFilter::rest);
    CHECK(rest.points.size() + work.points.size() == all.points.size());
  }

  TEST_CASE("daily series sum the day and skip days without passing bins") {
    const auto cal = short_calendar();
    std::map<std::int64_t, double> vol;
    vol[floor_div(parse_timestamp("2020-03-03T09:00:00Z"), 5 * kMinute)] = 2.0;
    vol[floor_div(parse_timestamp("2020-03-03T20:00:00Z"), 5 * kMinute)] = 3.0;
    const auto all = daily_series(vol, cal, HoursFilter::all);
    CHECK(all.points.size() == 16);
    CHECK(all.points[1].value == 5.0);
    const auto work = daily_series(vol, cal, HoursFilter::work);
    CHECK(work.points.size() == 12);  // weekends have no work bins
    CHECK(work.points[1].value == 2.0);
  }

  TEST_CASE("quantify uses medians for five-minute series") {
    const auto cal = short_calendar();
    Series s;
    s.granularity = Granularity::five_min;
    for (int i = 0; i < 20; ++i) {
      s.points.push_back({parse_timestamp("2020-03-02T00:00:00Z") + i * 5 * kMinute, i < 10 ? 100.0 : 1000.0});
      s.points.push_back({parse_timestamp("2020-03-12T00:00:00Z") + i * 5 * kMinute, 46.0 + (i % 3)});
    }
    const auto r = quantify(s, cal, 0.05);
    // before values: ten 100s and ten 1000s, median 550; after median 47.
    CHECK(r.before_stat == 550.0);
    CHECK(r.after_stat == 47.0);
    CHECK(r.ratio == doctest::Approx(47.0 / 550.0));
    CHECK(r.direction == Direction::down);
    CHECK(r.basis == RatioBasis::median);
    CHECK(format_ratio(r) == "8.5");
  }

  TEST_CASE("quantify uses means for daily series and tags new traffic") {
    const auto cal = short_calendar();
    Series s;
    s.granularity = Granularity::daily;
    for (int d = 0; d < 7; ++d) {
      s.points.push_back({cal.day_start_utc(date_from_days(days_since_epoch({2020, 3, 2}) + d)), 0.0});
      s.points.push_back({cal.day_start_utc(date_from_days(days_since_epoch({2020, 3, 11}) + d)), 10.0 + d});
    }
    s.points.push_back({cal.day_start_utc({2020, 3, 9}), 1e9});  // transition, ignored
    const auto r = quantify(s, cal, 0.05);
    CHECK(r.basis == RatioBasis::mean);
    CHECK(r.after_stat == 13.0);
    CHECK(r.tag == RatioTag::new_traffic);
    CHECK(std::isinf(r.ratio));
    CHECK(format_ratio(r) == "new");
    CHECK(r.direction == Direction::up);
    CHECK(r.n_before == 7);
    CHECK(r.n_after == 7);
    CHECK(quantify(s, cal, 0.0).direction == Direction::none);
  }

  TEST_CASE("quantify without after points is insufficient data") {
    const auto cal = short_calendar();
    Series s;
    s.points.push_back({cal.day_start_utc({2020, 3, 2}), 1.0});
    CHECK_THROWS_AS(quantify(s, cal, 0.05), Error);
  }

  TEST_CASE("store conserves candidate volume across labels") {
    const auto dir = directory();
    const auto pm = PortMap::defaults();
    std::mt19937_64 rng(4);
    std::vector<UpsampledFlow> flows;
    const std::uint16_t ports[] = {443, 22, 80, 5555, 179, 27015, 8801, 1000};
    for (int i = 0; i < 3000; ++i) {
      const Millis t = parse_timestamp("2020-03-02T00:00:00Z") + static_cast<Millis>(rng() % (16 * kDay));
      const auto dp = ports[rng() % std::size(ports)];
      const auto sp = dp == 179 ? std::uint16_t{179} : static_cast<std::uint16_t>(1024 + rng() % 60000);
      std::uint8_t pr = proto::tcp, flags = tcp_flag::ack;
      if (i % 17 == 0) pr = proto::icmp;
      if (i % 19 == 0) flags = tcp_flag::syn;
      if (i % 23 == 0) pr = 41;
      flows.push_back(flow(t, "30.0.1.5", sp, i % 2 ? "10.0.1.9" : "20.0.3.3", dp, 100 + rng() % 100000, pr, flags));
    }
    KnownMgPrefixes mg;
    mg.add_ground_truth(PrefixId::parse("20.0.3.0/24"), AppLabel::zoom);
    const auto store = build_store(flows, dir, pm, pm.service_ports(), &mg);

    std::uint64_t total = 0;
    for (const auto& f : flows) total += f.bytes;
    CHECK(store.total(Selector::total()).bytes == total);
    CHECK(store.total(Selector::total()).flow_count == flows.size());
    std::uint64_t coarse = 0;
    for (auto c : kCoarseClasses) coarse += store.total(Selector::of(c)).bytes;
    CHECK(coarse == total);
    std::uint64_t labeled = store.total(Selector::unlabeled()).bytes;
    for (auto l : kAppLabels) labeled += store.total(Selector::of(l)).bytes;
    CHECK(labeled == store.total(Selector::of(CoarseClass::candidate)).bytes);
    CHECK(store.total(Selector::of(AppLabel::zoom)).bytes > 0);
    CHECK(store.total(Selector::unlabeled()).bytes > 0);

    const auto tmp = std::filesystem::temp_directory_path() / "flowshift_store_test";
    std::filesystem::remove_all(tmp);
    store.write(tmp);
    CHECK(LabeledVolumeStore::read(tmp) == store);
    std::filesystem::remove_all(tmp);
  }

  TEST_CASE("app table reports planted directions and omits absent labels") {
    const auto cal = short_calendar();
    const auto dir = directory();
    const auto pm = PortMap::defaults();
    std::vector<UpsampledFlow> flows;
    std::mt19937_64 rng(8);
    std::lognormal_distribution<double> noise(0.0, 0.05);
    for (Millis t = cal.observation_start(); t < cal.observation_end(); t += 5 * kMinute) {
      const bool after = period_of(cal.local_date(t), cal) == Period::after;
      flows.push_back(flow(t, "30.0.1.5", 50000, "10.0.1.9", 22,
                           static_cast<std::uint64_t>(1e5 * (after ? 3.0 : 1.0) * noise(rng))));
      flows.push_back(flow(t, "10.0.1.9", 50000, "20.0.1.1", 443,
                           static_cast<std::uint64_t>(1e8 * (after ? 0.5 : 1.0) * noise(rng))));
      flows.push_back(flow(t, "10.0.1.9", 50000, "20.0.1.1", 123, static_cast<std::uint64_t>(1e6 * noise(rng)),
                           proto::udp, 0));
    }
    const auto store = build_store(flows, dir, pm, pm.service_ports(), nullptr);
    const auto table = app_change_table(store, cal, 0.05);
    auto row = [&](std::string_view name) -> const AppChangeRow& {
      for (const auto& r : table.rows) {
        if (r.name == name) return r;
      }
      FAIL("missing row " << name);
      throw;
    };
    CHECK(row("ssh").work.direction == Direction::up);
    CHECK(row("ssh").work.ratio == doctest::Approx(3.0).epsilon(0.03));
    CHECK(row("https").rest.direction == Direction::down);
    CHECK(row("https").rest.ratio == doctest::Approx(0.5).epsilon(0.03));
    CHECK(row("ntp").work.direction == Direction::none);
    CHECK(row("https").relevant);
    CHECK_FALSE(row("ssh").relevant);
    CHECK(std::find(table.omitted.begin(), table.omitted.end(), "telnet") != table.omitted.end());
    CHECK(std::find(table.omitted.begin(), table.omitted.end(), "icmp") != table.omitted.end());

    const auto none = app_change_table(store, cal, 0.0);
    for (const auto& r : none.rows) {
      CHECK(r.work.direction == Direction::none);
      CHECK(r.rest.direction == Direction::none);
    }
  }

  TEST_CASE("org tables keep large directed shifts only") {
    const auto cal = short_calendar();
    const auto dir = directory();
    const auto pm = PortMap::defaults();
    std::vector<UpsampledFlow> flows;
    for (Millis t = cal.observation_start(); t < cal.observation_end(); t += kHour) {
      const bool after = period_of(cal.local_date(t), cal) == Period::after;
      const auto day = static_cast<std::uint64_t>((t - cal.observation_start()) / kDay);
      flows.push_back(flow(t, "30.0.1.5", 50000, "10.0.1.9", 4500, (after ? 500'000'000'000ull : 100'000'000'000ull) + day));
      flows.push_back(flow(t, "10.0.1.9", 50000, "20.0.1.1", 443, 1'000'000 + day));
    }
    const auto store = build_store(flows, dir, pm, pm.service_ports(), nullptr);
    const auto t = org_shift_tables(store, cal, 0.05, 1e12);
    REQUIRE(t.inbound.size() == 1);
    CHECK(t.inbound[0].org_id == "uni");
    CHECK(t.inbound[0].label == "vpn");
    CHECK(t.inbound[0].change.direction == Direction::up);
    CHECK(t.inbound[0].daily_change_bytes == doctest::Approx(24 * 4e11).epsilon(1e-6));
    CHECK(t.inbound[0].daily.size() == 16);
    CHECK(t.outbound.empty());
    REQUIRE(t.peers.size() == 1);
    CHECK(t.peers[0].remote == OrgCategory::isp);
    CHECK(t.peers[0].orientation == Orientation::inbound);
    const auto loose = org_shift_tables(store, cal, 0.05, 0.0);
    CHECK(loose.outbound.size() == 1);
    CHECK(loose.outbound[0].label == "https");
  }

  TEST_CASE("liveness counts distinct addresses per day") {
    const auto cal = short_calendar();
    const auto dir = directory();
    std::vector<FlowRecord> flows;
    auto day_flows = [&](const char* prefix, int hosts, const Date& d) {
      for (int h = 1; h <= hosts; ++h) {
        auto f = flow(cal.day_start_utc(d) + h * kMinute, "30.0.1.5", 50000,
                      (std::string(prefix) + std::to_string(h)).c_str(), 443, 1000);
        flows.push_back(f);
        flows.push_back(f);  // repeats do not count twice
      }
    };
    for (int i = 0; i < 7; ++i) {
      const auto b = date_from_days(days_since_epoch(cal.before.first) + i);
      const auto a = date_from_days(days_since_epoch(cal.after.first) + i);
      day_flows("10.0.0.", 20 + i % 2, b);
      day_flows("10.0.0.", 60 + i % 2, a);
      day_flows("10.0.1.", 40 + i % 3, b);
      day_flows("10.0.1.", 40 + (i + 1) % 3, a);
      day_flows("10.0.2.", 90 - i % 2, b);
      day_flows("10.0.2.", 10 + i % 2, a);
    }
    const auto rep = liveness_analysis(flows, dir, cal, 0.05);
    REQUIRE(rep.records.size() == 3);
    CHECK(rep.inactive_prefixes == 1);
    CHECK(rep.records[0].category == LivenessCategory::inc);
    CHECK(rep.records[1].category == LivenessCategory::same);
    CHECK(rep.records[2].category == LivenessCategory::dec);
    CHECK(rep.records[0].daily.front().second == 20);
    CHECK(rep.records[0].daily.size() == 14);
    REQUIRE(rep.summary.size() == 2);
    CHECK(rep.summary[0].name == "education");
    CHECK(rep.summary[1].name == "all");
    CHECK(rep.summary[1].counts == std::array<std::size_t, 3>{1, 1, 1});
    CHECK(rep.summary[1].percent[0] + rep.summary[1].percent[1] + rep.summary[1].percent[2] ==
          doctest::Approx(100.0));
  }

  TEST_CASE("per-address report") {
    const auto cal = short_calendar();
    const auto dir = directory();
    const auto svc = PortMap::defaults().service_ports();
    std::vector<UpsampledFlow> raw;
    for (Millis t = cal.observation_start(); t < cal.observation_end(); t += kHour) {
      const bool after = period_of(cal.local_date(t), cal) == Period::after;
      const auto day = static_cast<std::uint64_t>((t - cal.observation_start()) / kDay);
      raw.push_back(flow(t, "10.0.3.7", 4500, "30.0.1.1", 50000, (after ? 4000 : 1000) + day));
    }
    const auto flows = infer_directions(raw, dir, svc);
    const auto rep = ip_change_report(parse_ipv4("10.0.3.7"), flows, cal, svc, 0.05);
    CHECK(rep.role.role == IpRole::server);
    CHECK(rep.work.direction == Direction::up);
    CHECK(rep.rest.direction == Direction::up);
    CHECK(rep.hourly.size() == 16 * 24);
    CHECK(rep.weekly.size() == 3);
    CHECK_THROWS_AS(ip_change_report(parse_ipv4("10.0.3.8"), flows, cal, svc, 0.05), Error);
  }
}
