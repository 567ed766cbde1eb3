#include "flowshift/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <unordered_map>

#include <json.hpp>

#include "flowshift/error.hpp"
#include "flowshift/kernels.hpp"

namespace flowshift {

std::string_view to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::dns_amp: return "dns_amp";
    case AnomalyKind::ntp_amp: return "ntp_amp";
    case AnomalyKind::icmp_flood: return "icmp_flood";
    case AnomalyKind::syn_flood: return "syn_flood";
    case AnomalyKind::other_bandwidth: break;
  }
  return "other_bandwidth";
}

std::string_view to_string(StreamKind s) {
  switch (s) {
    case StreamKind::ntp: return "ntp";
    case StreamKind::dns: return "dns";
    case StreamKind::icmp: return "icmp";
    case StreamKind::syn_synack: return "syn_synack";
    case StreamKind::overall: break;
  }
  return "overall";
}

AnomalyKind parse_anomaly_kind(std::string_view s) {
  for (auto k : kAnomalyKinds) {
    if (to_string(k) == s) return k;
  }
  throw input_error("unknown anomaly kind '" + std::string(s) + "'");
}

AnomalyKind kind_of(StreamKind s) {
  switch (s) {
    case StreamKind::ntp: return AnomalyKind::ntp_amp;
    case StreamKind::dns: return AnomalyKind::dns_amp;
    case StreamKind::icmp: return AnomalyKind::icmp_flood;
    case StreamKind::syn_synack: return AnomalyKind::syn_flood;
    case StreamKind::overall: break;
  }
  return AnomalyKind::other_bandwidth;
}

bool counts_packets(StreamKind s) { return s == StreamKind::icmp || s == StreamKind::syn_synack; }

bool in_stream(StreamKind s, const FlowRecord& f) {
  switch (s) {
    case StreamKind::overall: return true;
    case StreamKind::ntp: return f.proto == proto::udp && f.src_port == 123;
    case StreamKind::dns: return f.proto == proto::udp && f.src_port == 53;
    case StreamKind::icmp: return f.proto == proto::icmp;
    case StreamKind::syn_synack:
      return f.proto == proto::tcp && (f.tcp_flags == tcp_flag::syn || f.tcp_flags == (tcp_flag::syn | tcp_flag::ack));
  }
  return false;
}

FlowKey FlowKey::of(const FlowRecord& f) { return {f.src_ip >> 8, f.dst_ip >> 8, f.dst_port, f.proto}; }

namespace {

MonitorStream build_stream(StreamKind kind, std::span<const UpsampledFlow> flows, std::int64_t first_bin,
                           std::size_t n) {
  struct Entry {
    std::size_t bin;
    FlowKey key;
    double value;
  };
  std::vector<Entry> entries;
  const bool packets = counts_packets(kind);
  for (const auto& f : flows) {
    if (!in_stream(kind, f)) continue;
    const std::int64_t b = floor_div(f.ts_start, kAnomalyBin) - first_bin;
    if (b < 0 || static_cast<std::size_t>(b) >= n) continue;
    entries.push_back({static_cast<std::size_t>(b), FlowKey::of(f), double(packets ? f.packets : f.bytes)});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.bin != b.bin ? a.bin < b.bin : a.key < b.key;
  });
  MonitorStream s;
  s.kind = kind;
  s.first_bin = first_bin;
  s.volume.assign(n, 0.0);
  s.keys.resize(n);
  for (const auto& e : entries) {
    s.volume[e.bin] += e.value;
    auto& bin = s.keys[e.bin];
    if (!bin.empty() && bin.back().key == e.key) {
      bin.back().value += e.value;
    } else {
      bin.push_back({e.key, e.value});
    }
  }
  return s;
}

bool inside_any(std::size_t bin, std::span<const BinInterval> intervals) {
  return std::any_of(intervals.begin(), intervals.end(),
                     [&](const BinInterval& iv) { return iv.first <= bin && bin <= iv.last; });
}

struct Cluster {
  BinInterval span;
  bool equilibrium = false;
  bool threshold = false;
};

std::vector<Cluster> cluster(const StreamCandidates& c) {
  std::vector<Cluster> all;
  for (const auto& iv : c.equilibrium) all.push_back({iv, true, false});
  for (const auto& iv : c.threshold) all.push_back({iv, false, true});
  std::sort(all.begin(), all.end(), [](const Cluster& a, const Cluster& b) { return a.span < b.span; });
  std::vector<Cluster> out;
  for (const auto& x : all) {
    if (!out.empty() && x.span.first <= out.back().span.last) {
      auto& y = out.back();
      y.span.last = std::max(y.span.last, x.span.last);
      y.equilibrium |= x.equilibrium;
      y.threshold |= x.threshold;
    } else {
      out.push_back(x);
    }
  }
  return out;
}

AnomalyEvent make_event(AnomalyKind kind, const MonitorStream& s, const Cluster& c,
                        std::span<const BinInterval> exclude, const ExpectedVolumeParams& params) {
  AnomalyEvent e;
  e.kind = kind;
  e.start = (s.first_bin + static_cast<std::int64_t>(c.span.first)) * kAnomalyBin;
  e.end = (s.first_bin + static_cast<std::int64_t>(c.span.last) + 1) * kAnomalyBin;
  e.equilibrium = c.equilibrium;
  e.threshold = c.threshold;
  for (std::size_t i = c.span.first; i <= c.span.last; ++i) e.v_peak = std::max(e.v_peak, s.rate(i));
  e.v_exp = expected_volume(s, c.span, exclude, params);
  if (e.v_exp) {
    e.zeta = e.v_peak / *e.v_exp;
  } else {
    e.note = "expected volume unavailable";
  }
  e.confirmed = corroborated(e.equilibrium, e.threshold, e.zeta);
  return e;
}

}  // namespace

std::array<MonitorStream, 5> build_streams(std::span<const UpsampledFlow> flows, Millis start, Millis end) {
  if (end <= start) throw input_error("empty monitoring window");
  const std::int64_t first = floor_div(start, kAnomalyBin);
  const auto n = static_cast<std::size_t>(floor_div(end - 1, kAnomalyBin) - first + 1);
  std::array<std::future<MonitorStream>, 5> jobs;
  for (std::size_t i = 0; i < kStreamKinds.size(); ++i) {
    jobs[i] = std::async(std::launch::async, build_stream, kStreamKinds[i], flows, first, n);
  }
  std::array<MonitorStream, 5> out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = jobs[i].get();
  return out;
}

double equilibrium_statistic(std::span<const KeyVolume> prev, std::span<const KeyVolume> next) {
  std::vector<double> deltas;
  deltas.reserve(prev.size() + next.size());
  std::size_t i = 0, j = 0;
  while (i < prev.size() || j < next.size()) {
    if (j == next.size() || (i < prev.size() && prev[i].key < next[j].key)) {
      deltas.push_back(-prev[i++].value);
    } else if (i == prev.size() || next[j].key < prev[i].key) {
      deltas.push_back(next[j++].value);
    } else {
      deltas.push_back(next[j++].value - prev[i++].value);
    }
  }
  if (deltas.empty()) return 0.0;
  const auto m = kernels::moments_f64(deltas);
  const double f = double(deltas.size());
  const double mean = m.sum / f;
  double var = deltas.size() > 1 ? (m.sum_sq - m.sum * mean) / (f - 1.0) : 0.0;
  if (var <= m.sum_sq / f * 1e-12) var = 0.0;
  if (var == 0.0) {
    if (mean == 0.0) return 0.0;
    return mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return mean * std::sqrt(f) / std::sqrt(var);
}

std::vector<BinInterval> equilibrium_detect(const MonitorStream& stream, const EquilibriumParams& params) {
  if (stream.size() < 2) throw insufficient_data("equilibrium detection needs at least two bins");
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<BinInterval> out;
  std::size_t onset = none;
  std::size_t last_positive = 0;
  for (std::size_t i = 1; i < stream.size(); ++i) {
    const double k = equilibrium_statistic(stream.keys[i - 1], stream.keys[i]);
    if (k > params.k_threshold) {
      if (onset != none && last_positive + 1 != i) {
        out.push_back({onset, onset});
        onset = i;
      } else if (onset == none) {
        onset = i;
      }
      last_positive = i;
    } else if (k < -params.k_threshold && onset != none) {
      out.push_back({onset, i - 1});
      onset = none;
    }
    if (onset != none && i - onset >= params.window) {
      out.push_back({onset, onset});
      onset = none;
    }
  }
  if (onset != none) out.push_back({onset, stream.size() - 1});
  return out;
}

std::optional<double> ThresholdRules::for_stream(StreamKind s) const {
  switch (s) {
    case StreamKind::ntp: return ntp_bytes_per_s;
    case StreamKind::dns: return dns_bytes_per_s;
    case StreamKind::icmp: return icmp_pps;
    case StreamKind::syn_synack: return syn_pps;
    case StreamKind::overall: break;
  }
  return std::nullopt;
}

std::vector<BinInterval> threshold_detect(const MonitorStream& stream, const ThresholdRules& rules,
                                          std::vector<std::string>* warnings) {
  const auto rule = rules.for_stream(stream.kind);
  if (!rule) return {};
  if (*rule <= 0 && warnings) {
    warnings->push_back("threshold for " + std::string(to_string(stream.kind)) + " is not positive; every bin flags");
  }
  std::vector<BinInterval> out;
  std::optional<BinInterval> open;
  std::unordered_map<std::uint32_t, double> per_dst;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    per_dst.clear();
    double peak = 0.0;
    for (const auto& kv : stream.keys[i]) peak = std::max(peak, per_dst[kv.key.dst_prefix] += kv.value);
    const bool flagged = *rule <= 0 || peak / 300.0 > *rule;
    if (!flagged) continue;
    if (open && i <= open->last + 2) {
      open->last = i;
    } else {
      if (open) out.push_back(*open);
      open = BinInterval{i, i};
    }
  }
  if (open) out.push_back(*open);
  return out;
}

std::optional<double> expected_volume(const MonitorStream& stream, const BinInterval& interval,
                                      std::span<const BinInterval> exclude, const ExpectedVolumeParams& params) {
  if (interval.bins() <= params.short_bins && interval.first > 0 && !inside_any(interval.first - 1, exclude)) {
    const double v = stream.rate(interval.first - 1);
    if (v > 0) return v;
  }
  std::size_t peak = interval.first;
  for (std::size_t i = interval.first; i <= interval.last; ++i) {
    if (stream.volume[i] > stream.volume[peak]) peak = i;
  }
  double sum = 0.0;
  int count = 0;
  for (int d = -params.history_days; d <= params.history_days; ++d) {
    if (d == 0) continue;
    const auto j = static_cast<std::int64_t>(peak) + d * kBinsPerDay;
    if (j < 0 || j >= static_cast<std::int64_t>(stream.size())) continue;
    if (inside_any(static_cast<std::size_t>(j), exclude)) continue;
    sum += stream.rate(static_cast<std::size_t>(j));
    ++count;
  }
  if (count == 0 || sum <= 0) return std::nullopt;
  return sum / count;
}

bool corroborated(bool equilibrium, bool threshold, std::optional<double> zeta) {
  if (equilibrium && threshold) return true;
  return (equilibrium || threshold) && zeta && *zeta >= 2.0;
}

std::vector<AnomalyEvent> corroborate(const std::array<MonitorStream, 5>& streams,
                                      const std::array<StreamCandidates, 5>& candidates,
                                      const ExpectedVolumeParams& params) {
  std::array<std::vector<Cluster>, 5> clusters;
  std::vector<BinInterval> every;
  for (std::size_t s = 0; s < streams.size(); ++s) {
    clusters[s] = cluster(candidates[s]);
    for (const auto& c : clusters[s]) every.push_back(c.span);
  }
  std::vector<Cluster> overall_only;
  for (const auto& iv : candidates[0].equilibrium) {
    bool absorbed = false;
    for (std::size_t s = 1; s < streams.size(); ++s) {
      for (auto& c : clusters[s]) {
        if (c.span.overlaps(iv)) {
          c.equilibrium = true;
          absorbed = true;
        }
      }
    }
    if (!absorbed) overall_only.push_back({iv, true, false});
  }

  std::vector<AnomalyEvent> events;
  for (std::size_t s = 1; s < streams.size(); ++s) {
    std::vector<BinInterval> own;
    for (const auto& c : clusters[s]) own.push_back(c.span);
    for (const auto& c : clusters[s]) events.push_back(make_event(kind_of(streams[s].kind), streams[s], c, own, params));
  }
  for (const auto& c : overall_only) {
    events.push_back(make_event(AnomalyKind::other_bandwidth, streams[0], c, every, params));
  }
  std::stable_sort(events.begin(), events.end(), [](const AnomalyEvent& a, const AnomalyEvent& b) {
    return a.start != b.start ? a.start < b.start : a.kind < b.kind;
  });
  return events;
}

AnomalyReport detect_anomalies(std::span<const UpsampledFlow> flows, const StudyCalendar& cal,
                               const AnomalyConfig& config) {
  const auto streams = build_streams(flows, cal.observation_start(), cal.observation_end());
  std::array<StreamCandidates, 5> candidates;
  std::array<std::vector<std::string>, 5> warnings;
  std::array<std::future<void>, 5> jobs;
  for (std::size_t s = 0; s < streams.size(); ++s) {
    jobs[s] = std::async(std::launch::async, [&, s] {
      candidates[s].equilibrium = equilibrium_detect(streams[s], config.equilibrium);
      candidates[s].threshold = threshold_detect(streams[s], config.rules, &warnings[s]);
    });
  }
  for (auto& j : jobs) j.get();
  AnomalyReport report;
  report.events = corroborate(streams, candidates, config.expected);
  for (const auto& w : warnings) report.warnings.insert(report.warnings.end(), w.begin(), w.end());
  return report;
}

void write_event_json(std::ostream& out, const AnomalyEvent& e) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(e.kind);
  j["start"] = format_timestamp(e.start);
  j["end"] = format_timestamp(e.end);
  auto detectors = nlohmann::ordered_json::array();
  if (e.equilibrium) detectors.push_back("equilibrium");
  if (e.threshold) detectors.push_back("threshold");
  j["detectors"] = detectors;
  j["v_peak"] = e.v_peak;
  j["v_exp"] = e.v_exp ? nlohmann::ordered_json(*e.v_exp) : nlohmann::ordered_json();
  j["zeta"] = e.zeta ? nlohmann::ordered_json(*e.zeta) : nlohmann::ordered_json();
  j["confirmed"] = e.confirmed;
  if (!e.note.empty()) j["note"] = e.note;
  out << j.dump() << '\n';
}

std::vector<AnomalyChangeRow> anomaly_change_table(std::span<const AnomalyEvent> events, const StudyCalendar& cal) {
  struct Acc {
    std::size_t count = 0;
    double duration = 0.0;
    double zeta = 0.0;
    std::size_t zeta_count = 0;
  };
  std::array<std::array<Acc, 2>, 5> acc{};
  for (const auto& e : events) {
    if (!e.confirmed) continue;
    const auto p = period_of(cal.local_date(e.start), cal);
    if (p != Period::before && p != Period::after) continue;
    auto& a = acc[static_cast<std::size_t>(e.kind)][p == Period::before ? 0 : 1];
    a.count += 1;
    a.duration += double(e.duration()) / double(kMinute);
    if (e.zeta) {
      a.zeta += *e.zeta;
      a.zeta_count += 1;
    }
  }
  const double days[2] = {double(cal.before.days()), double(cal.after.days())};
  std::vector<AnomalyChangeRow> rows;
  for (auto kind : kAnomalyKinds) {
    const auto& [b, a] = acc[static_cast<std::size_t>(kind)];
    if (b.count == 0 && a.count == 0) continue;
    AnomalyChangeRow r;
    r.kind = kind;
    r.before_count = b.count;
    r.after_count = a.count;
    r.before_per_day = double(b.count) / days[0];
    r.after_per_day = double(a.count) / days[1];
    if (b.count) r.before_duration_min = b.duration / double(b.count);
    if (a.count) r.after_duration_min = a.duration / double(a.count);
    if (b.zeta_count) r.before_zeta = b.zeta / double(b.zeta_count);
    if (a.zeta_count) r.after_zeta = a.zeta / double(a.zeta_count);
    if (b.count) {
      r.frequency_ratio = r.after_per_day / r.before_per_day;
      if (a.count) r.duration_ratio = r.after_duration_min / r.before_duration_min;
      if (a.zeta_count && b.zeta_count) r.zeta_ratio = r.after_zeta / r.before_zeta;
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace flowshift
