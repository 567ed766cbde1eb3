#include "flowshift/change.hpp"

#include <bitset>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

#include "flowshift/error.hpp"

namespace flowshift {
namespace {

constexpr Millis kBin = width_ms(BinWidth::five_min);

bool passes(HoursFilter f, Millis t, const StudyCalendar& cal) {
  if (f == HoursFilter::all) return true;
  return (hours_of(t, cal) == Hours::work) == (f == HoursFilter::work);
}

std::vector<Date> period_days(const DateInterval& iv) {
  std::vector<Date> out;
  for (auto d = days_since_epoch(iv.first); d <= days_since_epoch(iv.last); ++d) out.push_back(date_from_days(d));
  return out;
}

std::string selector_key_name(const StoreKey& k) {
  if (k.label >= 0) return std::string(to_string(kAppLabels[k.label]));
  if (k.coarse == CoarseClass::candidate) return "unlabeled";
  return std::string(to_string(k.coarse));
}

}  // namespace

std::string_view to_string(HoursFilter h) {
  switch (h) {
    case HoursFilter::work: return "work";
    case HoursFilter::rest: return "rest";
    case HoursFilter::all: break;
  }
  return "all";
}

std::string_view to_string(LivenessCategory c) {
  switch (c) {
    case LivenessCategory::inc: return "inc";
    case LivenessCategory::dec: return "dec";
    case LivenessCategory::same: break;
  }
  return "same";
}

Series five_min_series(const std::map<std::int64_t, double>& volume, const StudyCalendar& cal, HoursFilter hours,
                       std::string key) {
  Series s;
  s.key = std::move(key);
  s.granularity = Granularity::five_min;
  s.hours = hours;
  const std::int64_t first = floor_div(cal.observation_start(), kBin);
  const std::int64_t last = floor_div(cal.observation_end() - 1, kBin);
  auto it = volume.lower_bound(first);
  for (std::int64_t b = first; b <= last; ++b) {
    while (it != volume.end() && it->first < b) ++it;
    const Millis t = b * kBin;
    if (!passes(hours, t, cal)) continue;
    const double v = (it != volume.end() && it->first == b) ? it->second : 0.0;
    s.points.push_back({t, v});
  }
  return s;
}

Series daily_series(const std::map<std::int64_t, double>& volume, const StudyCalendar& cal, HoursFilter hours,
                    std::string key) {
  Series s;
  s.key = std::move(key);
  s.granularity = Granularity::daily;
  s.hours = hours;
  const auto first_day = days_since_epoch(cal.before.first);
  const auto last_day = days_since_epoch(cal.after.last);
  for (auto d = first_day; d <= last_day; ++d) {
    const Millis start = cal.day_start_utc(date_from_days(d));
    const std::int64_t b0 = floor_div(start, kBin);
    const std::int64_t b1 = floor_div(start + kDay, kBin);
    double sum = 0.0;
    bool any = false;
    auto it = volume.lower_bound(b0);
    for (std::int64_t b = b0; b < b1; ++b) {
      if (!passes(hours, b * kBin, cal)) continue;
      any = true;
      while (it != volume.end() && it->first < b) ++it;
      if (it != volume.end() && it->first == b) sum += it->second;
    }
    if (any) s.points.push_back({start, sum});
  }
  return s;
}

std::string format_ratio(const ChangeResult& r) {
  switch (r.tag) {
    case RatioTag::new_traffic: return "new";
    case RatioTag::undefined: return "";
    case RatioTag::normal: break;
  }
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.1f", r.ratio * 100.0);
  return buf;
}

ChangeResult quantify(const Series& series, const StudyCalendar& cal, double alpha) {
  std::vector<double> before, after;
  for (const auto& p : series.points) {
    switch (period_of(cal.local_date(p.t), cal)) {
      case Period::before: before.push_back(p.value); break;
      case Period::after: after.push_back(p.value); break;
      default: break;
    }
  }
  if (before.empty() || after.empty()) throw insufficient_data("insufficient data: series has no points in the before or after period");
  auto w = wmw_test(before, after, alpha);
  ChangeResult r;
  r.direction = w.direction;
  r.p_less = w.p_less;
  r.p_greater = w.p_greater;
  r.n_before = before.size();
  r.n_after = after.size();
  if (series.granularity == Granularity::five_min) {
    r.basis = RatioBasis::median;
    r.before_stat = median(before);
    r.after_stat = median(after);
  } else {
    r.basis = RatioBasis::mean;
    r.before_stat = mean(before);
    r.after_stat = mean(after);
  }
  if (r.before_stat == 0.0) {
    r.tag = r.after_stat > 0.0 ? RatioTag::new_traffic : RatioTag::undefined;
    r.ratio = r.after_stat > 0.0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
  } else {
    r.ratio = r.after_stat / r.before_stat;
  }
  return r;
}

AppChangeTable app_change_table(const LabeledVolumeStore& store, const StudyCalendar& cal, double alpha) {
  std::vector<std::pair<std::string, Selector>> selectors;
  for (auto l : kAppLabels) selectors.emplace_back(std::string(to_string(l)), Selector::of(l));
  for (auto c : {CoarseClass::candidate, CoarseClass::syn, CoarseClass::icmp, CoarseClass::otprot}) {
    selectors.emplace_back(std::string(to_string(c)), Selector::of(c));
  }

  const auto total = store.series(Selector::total());
  auto daily_totals = daily_series(total, cal, HoursFilter::all);
  double before_total = 0.0;
  for (const auto& p : daily_totals.points) {
    if (period_of(cal.local_date(p.t), cal) == Period::before) before_total += p.value;
  }

  AppChangeTable table;
  for (const auto& [name, sel] : selectors) {
    const auto vol = store.series(sel);
    double sum = 0.0;
    for (const auto& [b, v] : vol) sum += v;
    if (sum == 0.0) {
      table.omitted.push_back(name);
      continue;
    }
    AppChangeRow row;
    row.name = name;
    row.selector = sel;
    auto daily = daily_series(vol, cal, HoursFilter::all);
    double before_sum = 0.0;
    std::array<std::size_t, 2> big{}, days{};
    for (std::size_t i = 0; i < daily.points.size(); ++i) {
      const auto period = period_of(cal.local_date(daily.points[i].t), cal);
      if (period != Period::before && period != Period::after) continue;
      const std::size_t slot = period == Period::before ? 0 : 1;
      if (slot == 0) before_sum += daily.points[i].value;
      days[slot] += 1;
      const double day_total = daily_totals.points[i].value;
      if (day_total > 0.0 && daily.points[i].value >= 0.01 * day_total) big[slot] += 1;
    }
    row.volume_share = before_total > 0.0 ? before_sum / before_total : 0.0;
    for (std::size_t s = 0; s < 2; ++s) {
      if (days[s] > 0 && 7 * big[s] >= days[s]) row.relevant = true;
    }
    row.work = quantify(five_min_series(vol, cal, HoursFilter::work), cal, alpha);
    row.rest = quantify(five_min_series(vol, cal, HoursFilter::rest), cal, alpha);
    table.rows.push_back(std::move(row));
  }
  return table;
}

OrgShiftTables org_shift_tables(const LabeledVolumeStore& store, const StudyCalendar& cal, double alpha,
                                double min_daily_change) {
  using Volume = std::map<std::int64_t, double>;
  std::map<std::pair<std::uint32_t, std::string>, Volume> in, out;
  std::map<std::tuple<std::uint32_t, OrgCategory, Orientation>, Volume> peers;
  const auto& orgs = store.orgs();
  for (const auto& [k, v] : store.cells()) {
    if (!k.direction_known || k.orientation == Orientation::transit) continue;
    const auto bytes = static_cast<double>(v.bytes);
    const auto name = selector_key_name(k);
    const bool server_local = k.orientation == Orientation::inbound || k.orientation == Orientation::local_local;
    const bool client_local = k.orientation == Orientation::outbound || k.orientation == Orientation::local_local;
    if (server_local && k.server_org != 0) {
      in[{k.server_org, name}][k.bin] += bytes;
      peers[{k.server_org, orgs[k.client_org].category, Orientation::inbound}][k.bin] += bytes;
    }
    if (client_local && k.client_org != 0) {
      out[{k.client_org, name}][k.bin] += bytes;
      peers[{k.client_org, orgs[k.server_org].category, Orientation::outbound}][k.bin] += bytes;
    }
  }
  auto keep = [&](const ChangeResult& c) {
    return c.direction != Direction::none && std::fabs(c.after_stat - c.before_stat) >= min_daily_change;
  };
  OrgShiftTables t;
  for (auto [src, dst] : {std::pair{&in, &t.inbound}, std::pair{&out, &t.outbound}}) {
    for (const auto& [key, vol] : *src) {
      auto daily = daily_series(vol, cal, HoursFilter::all);
      auto c = quantify(daily, cal, alpha);
      if (keep(c)) {
        dst->push_back({orgs[key.first].id, key.second, c, c.after_stat - c.before_stat, std::move(daily.points)});
      }
    }
  }
  for (const auto& [key, vol] : peers) {
    auto daily = daily_series(vol, cal, HoursFilter::all);
    auto c = quantify(daily, cal, alpha);
    if (keep(c)) {
      t.peers.push_back({orgs[std::get<0>(key)].id, std::get<1>(key), std::get<2>(key), c, c.after_stat - c.before_stat,
                         std::move(daily.points)});
    }
  }
  return t;
}

LivenessReport liveness_analysis(std::span<const FlowRecord> flows, const PrefixDirectory& dir,
                                 const StudyCalendar& cal, double alpha) {
  std::vector<Date> days = period_days(cal.before);
  const std::size_t n_before = days.size();
  for (const auto& d : period_days(cal.after)) days.push_back(d);
  const auto before_first = days_since_epoch(cal.before.first);
  const auto after_first = days_since_epoch(cal.after.first);
  auto slot_of = [&](Millis t) -> std::optional<std::size_t> {
    const Date d = cal.local_date(t);
    const auto p = period_of(d, cal);
    if (p == Period::before) return static_cast<std::size_t>(days_since_epoch(d) - before_first);
    if (p == Period::after) return n_before + static_cast<std::size_t>(days_since_epoch(d) - after_first);
    return std::nullopt;
  };

  std::unordered_map<std::uint32_t, std::vector<std::bitset<256>>> live;
  auto mark = [&](Ipv4 addr, std::size_t slot) {
    auto& v = live[addr >> 8];
    if (v.empty()) v.resize(days.size());
    v[slot].set(addr & 0xFF);
  };
  for (const auto& f : flows) {
    auto slot = slot_of(f.ts_start);
    if (!slot) continue;
    if (dir.is_local(f.src_ip)) mark(f.src_ip, *slot);
    if (dir.is_local(f.dst_ip)) mark(f.dst_ip, *slot);
  }

  LivenessReport report;
  std::map<std::string, std::array<std::size_t, 3>> by_category;
  for (PrefixId p : dir.local_prefixes()) {
    auto it = live.find(p.key());
    if (it == live.end()) {
      ++report.inactive_prefixes;
      continue;
    }
    LivenessRecord rec;
    rec.prefix = p;
    const auto& org = dir.lookup(p);
    rec.org_id = org.id;
    rec.org_category = org.category;
    Series s;
    s.granularity = Granularity::daily;
    for (std::size_t i = 0; i < days.size(); ++i) {
      const int count = static_cast<int>(it->second[i].count());
      rec.daily.emplace_back(days[i], count);
      s.points.push_back({cal.day_start_utc(days[i]), double(count)});
    }
    rec.change = quantify(s, cal, alpha);
    rec.category = rec.change.direction == Direction::up     ? LivenessCategory::inc
                   : rec.change.direction == Direction::down ? LivenessCategory::dec
                                                             : LivenessCategory::same;
    by_category[std::string(to_string(org.category))][static_cast<std::size_t>(rec.category)] += 1;
    report.records.push_back(std::move(rec));
  }

  auto make_row = [](std::string name, const std::array<std::size_t, 3>& counts) {
    LivenessSummaryRow row;
    row.name = std::move(name);
    row.counts = counts;
    const std::size_t total = counts[0] + counts[1] + counts[2];
    for (std::size_t i = 0; i < 3; ++i) row.percent[i] = total ? 100.0 * double(counts[i]) / double(total) : 0.0;
    return row;
  };
  std::array<std::size_t, 3> all{};
  for (auto cat : {OrgCategory::education, OrgCategory::government, OrgCategory::business, OrgCategory::isp,
                   OrgCategory::hosting, OrgCategory::unknown}) {
    auto it = by_category.find(std::string(to_string(cat)));
    if (it == by_category.end()) continue;
    for (std::size_t i = 0; i < 3; ++i) all[i] += it->second[i];
    report.summary.push_back(make_row(it->first, it->second));
  }
  report.summary.push_back(make_row("all", all));
  return report;
}

IpReport ip_change_report(Ipv4 ip, std::span<const DirectedFlow> flows, const StudyCalendar& cal,
                          const ServicePorts& svc, double alpha, double role_threshold) {
  IpReport r;
  r.ip = ip;
  r.role = classify_ip_role(ip, flows, svc, role_threshold);
  std::map<std::int64_t, double> five_min, hourly;
  for (const auto& f : flows) {
    if (f.src_ip != ip && f.dst_ip != ip) continue;
    five_min[floor_div(f.ts_start, kBin)] += double(f.bytes);
    hourly[floor_div(f.ts_start, kHour)] += double(f.bytes);
  }
  r.work = quantify(daily_series(five_min, cal, HoursFilter::work), cal, alpha);
  r.rest = quantify(daily_series(five_min, cal, HoursFilter::rest), cal, alpha);

  const Millis start = cal.observation_start(), end = cal.observation_end();
  for (Millis t = start; t < end; t += kHour) {
    auto it = hourly.find(floor_div(t, kHour));
    r.hourly.push_back({t, it == hourly.end() ? 0.0 : it->second});
  }
  for (Millis w = start; w < end; w += 7 * kDay) {
    double sum = 0.0;
    for (auto it = hourly.lower_bound(floor_div(w, kHour)); it != hourly.end() && it->first * kHour < std::min(end, w + 7 * kDay); ++it) {
      sum += it->second;
    }
    r.weekly.push_back({w, sum});
  }
  return r;
}

}  // namespace flowshift
