#include "flowshift/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "flowshift/classify.hpp"
#include "flowshift/csv.hpp"
#include "flowshift/error.hpp"
#include "flowshift/store.hpp"

namespace flowshift::synth {

using nlohmann::json;

namespace {

constexpr Millis kBinMs = 5 * kMinute;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  return splitmix(splitmix(splitmix(a) ^ b) ^ c);
}

// Stream tags for per-(day, source) RNG seeding.
constexpr std::uint64_t kTagSeries = 1;
constexpr std::uint64_t kTagAnomaly = 2;
constexpr std::uint64_t kTagLiveness = 3;
constexpr std::uint64_t kTagMg = 4;

std::uint8_t proto_of(AppLabel l) {
  switch (l) {
    case AppLabel::dns:
    case AppLabel::ntp:
    case AppLabel::vpn: return proto::udp;
    default: return proto::tcp;
  }
}

constexpr std::uint8_t kTcpSession = tcp_flag::syn | tcp_flag::ack | tcp_flag::psh | tcp_flag::fin;

struct Endpoint {
  std::vector<PrefixId> prefixes;
  int host_lo = 1;
  int host_hi = 254;
  std::optional<Ipv4> fixed;
};

struct SeriesDef {
  std::string name;
  Endpoint client;
  Endpoint server;
  std::vector<PortWeight> server_ports;
  std::uint16_t client_port_lo = 32768;
  std::uint16_t client_port_hi = 60999;
  std::uint8_t req_flags = 0;
  std::uint8_t resp_flags = 0;
  double response_share = 0.8;
  double bpp = 1000.0;
  std::size_t flows_per_bin = 1;
  double work_per_bin = 0.0;  // before-period bytes per bin
  double rest_per_bin = 0.0;
  double flat_per_bin = 0.0;  // used when flat
  bool flat = false;
  double mult_work = 1.0;
  double mult_rest = 1.0;
  std::uint32_t rate = 100;
};

struct MgServer {
  PrefixId prefix;
  AppLabel app;
  MgRole role;
  std::string org;
  double scale = 1.0;  // bytes per connection
};

struct LivePrefix {
  PrefixId prefix;
  const LivenessSpec* plan;
  std::uint32_t rate;
};

struct Layout {
  const ScenarioSpec* spec = nullptr;
  std::map<std::string, std::size_t> org_index;
  std::vector<std::vector<PrefixId>> traffic;  // per org
  std::vector<std::vector<PrefixId>> owned;    // every prefix per org
  std::vector<PrefixId> pool;                  // internet prefixes outside any org
  std::vector<SeriesDef> series;
  std::vector<MgServer> mg;
  std::vector<AppProfile> profiles;
  std::vector<LivePrefix> live;
  std::vector<Ipv4> ip_addrs;
  double rest_norm = 1.0;

  const OrgSpec& org(const std::string& id) const { return spec->orgs[org_index.at(id)]; }
  std::uint32_t rate_of(const std::string& id) const { return spec->sampling_rates[org(id).ingest]; }
  const AppProfile& profile(AppLabel app) const {
    for (const auto& p : profiles) {
      if (p.app == app) return p;
    }
    throw input_error("no port profile for " + std::string(to_string(app)));
  }
};

PrefixId org_prefix(std::size_t org, std::size_t j) {
  const std::uint32_t a = 20 + static_cast<std::uint32_t>(org / 250);
  const std::uint32_t b = static_cast<std::uint32_t>(org % 250) + 1;
  return PrefixId::from_key((a << 16) | (b << 8) | static_cast<std::uint32_t>(j));
}

PrefixId pool_prefix(std::size_t k) {
  return PrefixId::from_key((200u << 16) | static_cast<std::uint32_t>(k));
}

double rest_shape(Millis t, const ScenarioSpec& spec) {
  const Millis local = spec.calendar.local(t);
  const auto h = floor_div(local, kHour) - floor_div(local, kDay) * 24;
  if (h < 6) return spec.diurnal.night;
  if (h >= 20 && h < 22) return spec.diurnal.evening;
  return 1.0;
}

// Mean of the rest shape over the rest hours of a week, so that the
// configured before volume is the class mean.
double rest_normalizer(const ScenarioSpec& spec) {
  double sum = 0.0;
  int n = 0;
  const auto& cal = spec.calendar;
  const Millis monday = cal.day_start_utc({2020, 3, 2});
  for (Millis t = monday; t < monday + 7 * kDay; t += kHour) {
    if (hours_of(t, cal) == Hours::work) continue;
    sum += rest_shape(t, spec);
    ++n;
  }
  return n ? sum / n : 1.0;
}

double period_multiplier(double m, Millis t, const StudyCalendar& cal) {
  const Date d = cal.local_date(t);
  switch (period_of(d, cal)) {
    case Period::after: return m;
    case Period::transition: {
      const double frac = double(days_since_epoch(d) - days_since_epoch(cal.transition.first) + 1) /
                          double(cal.transition.days() + 1);
      return 1.0 + (m - 1.0) * frac;
    }
    default: return 1.0;
  }
}

double series_expected(const SeriesDef& s, Millis t, const Layout& L) {
  if (s.flat) return s.flat_per_bin;
  const auto& cal = L.spec->calendar;
  if (hours_of(t, cal) == Hours::work) {
    return s.work_per_bin * period_multiplier(s.mult_work, t, cal);
  }
  return s.rest_per_bin * rest_shape(t, *L.spec) / L.rest_norm * period_multiplier(s.mult_rest, t, cal);
}

FlowRecord probe_flow(std::uint8_t proto_num, std::uint16_t src_port, std::uint16_t dst_port, std::uint8_t flags) {
  FlowRecord f;
  f.proto = proto_num;
  f.src_port = src_port;
  f.dst_port = dst_port;
  f.tcp_flags = flags;
  return f;
}

// Share of a series' byte volume landing in a stream, in the stream's unit
// per byte.
double stream_share(const SeriesDef& s, StreamKind stream) {
  double total_w = 0.0, share = 0.0;
  for (const auto& pw : s.server_ports) {
    total_w += pw.weight;
    const auto req = probe_flow(pw.proto, s.client_port_lo, pw.port, s.req_flags);
    const auto resp = probe_flow(pw.proto, pw.port, s.client_port_lo, s.resp_flags);
    double part = 0.0;
    if (in_stream(stream, req)) part += 1.0 - s.response_share;
    if (in_stream(stream, resp)) part += s.response_share;
    share += pw.weight * part;
  }
  if (total_w <= 0) return 0.0;
  share /= total_w;
  return counts_packets(stream) ? share / s.bpp : share;
}

std::vector<PortWeight> label_ports(AppLabel label, std::uint64_t seed, const Layout& L) {
  switch (label) {
    case AppLabel::highhigh: {
      std::mt19937_64 rng(mix(seed, 0x4848));
      std::vector<PortWeight> out;
      for (int i = 0; i < 4; ++i) {
        out.push_back({proto::tcp, static_cast<std::uint16_t>(10001 + rng() % 20000), 1.0});
      }
      return out;
    }
    case AppLabel::twoservice: return {{proto::tcp, 179, 1.0}};
    case AppLabel::noservice: return {{proto::tcp, 5555, 1.0}};
    default: break;
  }
  if (is_mg(label)) return L.profile(label).ports;
  static const PortMap defaults = PortMap::defaults();
  return {{proto_of(label), defaults.ports(label).front(), 1.0}};
}

Endpoint endpoint_of(const std::vector<PrefixId>& prefixes, int lo, int hi) {
  Endpoint e;
  e.prefixes = prefixes;
  e.host_lo = lo;
  e.host_hi = hi;
  return e;
}

std::vector<PrefixId> slice(const std::vector<PrefixId>& v, std::size_t from, std::size_t n) {
  std::vector<PrefixId> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(v[(from + i) % v.size()]);
  return out;
}

Layout make_layout(const ScenarioSpec& spec) {
  Layout L;
  L.spec = &spec;
  L.rest_norm = rest_normalizer(spec);
  L.profiles = spec.mg.profiles.empty() ? default_profiles() : spec.mg.profiles;
  for (std::size_t i = 0; i < spec.orgs.size(); ++i) L.org_index[spec.orgs[i].id] = i;
  L.traffic.resize(spec.orgs.size());
  L.owned.resize(spec.orgs.size());
  std::vector<std::size_t> next(spec.orgs.size(), 0);
  auto take = [&](std::size_t org) {
    PrefixId p = org_prefix(org, next[org]++);
    L.owned[org].push_back(p);
    return p;
  };
  for (std::size_t i = 0; i < spec.orgs.size(); ++i) {
    for (std::size_t j = 0; j < spec.orgs[i].prefixes; ++j) L.traffic[i].push_back(take(i));
  }
  for (const auto& lv : spec.liveness) {
    const auto o = L.org_index.at(lv.org);
    for (std::size_t j = 0; j < lv.prefixes; ++j) L.live.push_back({take(o), &lv, L.rate_of(lv.org)});
  }
  std::mt19937_64 scale_rng(mix(spec.seed, 0x5CA1E));
  std::lognormal_distribution<double> scale(std::log(2e6), 0.8);
  for (const auto& ms : spec.mg.servers) {
    const auto o = L.org_index.at(ms.org);
    for (std::size_t j = 0; j < ms.count; ++j) L.mg.push_back({take(o), ms.app, ms.role, ms.org, scale(scale_rng)});
  }
  for (std::size_t k = 0; k < spec.internet_prefixes; ++k) L.pool.push_back(pool_prefix(k));

  auto remote_prefixes = [&](const std::string& remote, std::size_t salt) {
    if (remote.empty()) return slice(L.pool, salt * 37, 32);
    return L.traffic[L.org_index.at(remote)];
  };

  for (std::size_t i = 0; i < spec.mix.size(); ++i) {
    const auto& m = spec.mix[i];
    SeriesDef s;
    s.name = m.org + "/" + std::string(to_string(m.label)) + "/" + std::string(to_string(m.hours));
    const auto& local = L.traffic[L.org_index.at(m.org)];
    std::vector<PrefixId> servers;
    if (is_mg(m.label)) {
      for (const auto& srv : L.mg) {
        if (srv.app == m.label && srv.role != MgRole::decoy) servers.push_back(srv.prefix);
      }
    } else {
      servers = remote_prefixes(m.remote, i);
    }
    if (m.inbound) {
      s.server = endpoint_of(local, 10, 19);
      s.client = endpoint_of(remote_prefixes(m.remote, i), 20, 254);
    } else {
      s.server = endpoint_of(servers, 10, 19);
      s.client = endpoint_of(local, 20, 254);
    }
    s.server_ports = label_ports(m.label, mix(spec.seed, i), L);
    if (m.label == AppLabel::twoservice) {
      s.client_port_lo = s.client_port_hi = 179;
    } else if (m.label == AppLabel::noservice) {
      s.client_port_lo = 6000;
      s.client_port_hi = 7999;
    }
    s.req_flags = s.resp_flags = kTcpSession;
    s.flows_per_bin = m.flows_per_bin;
    (m.hours == Hours::work ? s.work_per_bin : s.rest_per_bin) = m.before_bytes_per_hour / 12.0;
    (m.hours == Hours::work ? s.mult_work : s.mult_rest) = m.multiplier;
    s.rate = L.rate_of(m.org);
    L.series.push_back(std::move(s));
  }

  const auto& bg = spec.background;
  if (!bg.org.empty()) {
    const auto& local = L.traffic[L.org_index.at(bg.org)];
    const auto rate = L.rate_of(bg.org);
    auto flat = [&](std::string name, std::uint8_t pr, std::vector<PortWeight> ports, double per_bin, double share,
                    double bpp, std::uint8_t flags, std::size_t pool_from) {
      SeriesDef s;
      s.name = std::move(name);
      s.server = endpoint_of(slice(L.pool, pool_from, 16), 1, 254);
      s.client = endpoint_of(local, 1, 254);
      for (auto& p : ports) p.proto = pr;
      s.server_ports = std::move(ports);
      s.response_share = share;
      s.bpp = bpp;
      s.req_flags = s.resp_flags = flags;
      s.flows_per_bin = bg.flows_per_bin;
      s.flat = true;
      s.flat_per_bin = per_bin;
      s.rate = rate;
      L.series.push_back(std::move(s));
    };
    if (bg.ntp_bytes_per_s > 0) {
      flat("background/ntp", proto::udp, {{0, 123, 1}}, 2.0 * bg.ntp_bytes_per_s * 300, 0.5, 76, 0, 300);
    }
    if (bg.dns_bytes_per_s > 0) {
      flat("background/dns", proto::udp, {{0, 53, 1}}, bg.dns_bytes_per_s * 300 / 0.75, 0.75, 200, 0, 320);
    }
    if (bg.icmp_pps > 0) flat("background/icmp", proto::icmp, {{0, 0, 1}}, bg.icmp_pps * 300 * 84, 0.5, 84, 0, 340);
    if (bg.syn_pps > 0) {
      std::vector<PortWeight> probes;
      for (std::uint16_t p : {21, 22, 23, 25, 80, 110, 135, 139, 443, 445, 993, 3306, 3389, 5900, 8080}) {
        probes.push_back({0, p, 1});
      }
      flat("background/syn", proto::tcp, probes, bg.syn_pps * 300 * 60, 0.0, 60, tcp_flag::syn, 360);
    }
  }

  for (std::size_t i = 0; i < spec.ips.size(); ++i) {
    const auto& ip = spec.ips[i];
    const auto& local = L.traffic[L.org_index.at(ip.org)];
    const Ipv4 addr = local.front().base() | static_cast<Ipv4>(200 + (i % 50));
    L.ip_addrs.push_back(addr);
    for (auto hours : {Hours::work, Hours::rest}) {
      SeriesDef s;
      s.name = "ip/" + format_ipv4(addr) + "/" + std::string(to_string(hours));
      auto remote = endpoint_of(slice(L.pool, 400 + i * 13, 24), 20, 254);
      Endpoint self;
      self.fixed = addr;
      if (ip.role == IpRole::server) {
        s.server = self;
        s.client = remote;
      } else {
        s.client = self;
        s.server = remote;
      }
      s.server_ports = label_ports(ip.label, mix(spec.seed, 0x1F, i), L);
      s.req_flags = s.resp_flags = kTcpSession;
      (hours == Hours::work ? s.work_per_bin : s.rest_per_bin) = ip.before_bytes_per_hour / 12.0;
      (hours == Hours::work ? s.mult_work : s.mult_rest) = hours == Hours::work ? ip.multiplier_work : ip.multiplier_rest;
      s.rate = L.rate_of(ip.org);
      L.series.push_back(std::move(s));
    }
  }
  return L;
}

double stream_expected(const Layout& L, StreamKind stream, std::int64_t bin) {
  const Millis t = bin * kBinMs;
  double v = 0.0;
  for (const auto& s : L.series) {
    const double share = stream_share(s, stream);
    if (share > 0) v += series_expected(s, t, L) * share;
  }
  return v;
}

// Per-day output and tallies, merged in day order.
struct DayOutput {
  std::vector<FlowRecord> flows;
  std::uint64_t true_bytes = 0;
  std::uint64_t true_packets = 0;
  std::vector<std::uint64_t> mg_bytes;
};

class Emitter {
 public:
  Emitter(DayOutput& out, std::mt19937_64& rng) : out_(out), rng_(rng) {}

  // One unidirectional flow of `bytes` true volume; sampled at `rate`.
  void emit(Millis start, Millis end, std::uint8_t pr, Ipv4 src, std::uint16_t sport, Ipv4 dst, std::uint16_t dport,
            double bytes, double bpp, std::uint8_t flags, std::uint32_t rate) {
    if (bytes < 1.0) return;
    const auto packets = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(bytes / bpp)));
    const auto total = std::max<std::uint64_t>(packets, static_cast<std::uint64_t>(std::llround(bytes)));
    out_.true_bytes += total;
    out_.true_packets += packets;
    std::binomial_distribution<std::uint64_t> pick(packets, 1.0 / rate);
    const std::uint64_t sp = rate == 1 ? packets : pick(rng_);
    if (sp == 0) return;
    const auto sb = std::max<std::uint64_t>(sp, static_cast<std::uint64_t>(std::llround(double(total) * double(sp) / double(packets))));
    FlowRecord f;
    f.ts_start = start;
    f.ts_end = end;
    f.proto = pr;
    f.src_ip = src;
    f.src_port = pr == proto::icmp ? 0 : sport;
    f.dst_ip = dst;
    f.dst_port = pr == proto::icmp ? 0 : dport;
    f.sampled_packets = sp;
    f.sampled_bytes = sb;
    f.tcp_flags = pr == proto::tcp ? flags : 0;
    f.sampling_rate = rate;
    out_.flows.push_back(f);
  }

  Millis uniform_time(Millis lo, Millis hi) {
    return lo + static_cast<Millis>(rng_() % static_cast<std::uint64_t>(hi - lo));
  }

  Ipv4 address(const Endpoint& e) {
    if (e.fixed) return *e.fixed;
    const auto& p = e.prefixes[rng_() % e.prefixes.size()];
    return p.base() | static_cast<Ipv4>(e.host_lo + static_cast<int>(rng_() % (e.host_hi - e.host_lo + 1)));
  }

  const PortWeight& port(const std::vector<PortWeight>& ports) {
    double total = 0.0;
    for (const auto& p : ports) total += p.weight;
    double x = std::uniform_real_distribution<double>(0.0, total)(rng_);
    for (const auto& p : ports) {
      if (x < p.weight) return p;
      x -= p.weight;
    }
    return ports.back();
  }

  std::uint16_t between(std::uint16_t lo, std::uint16_t hi) {
    return static_cast<std::uint16_t>(lo + rng_() % (static_cast<std::uint32_t>(hi - lo) + 1));
  }

 private:
  DayOutput& out_;
  std::mt19937_64& rng_;
};

struct AttackTemplate {
  std::uint8_t proto;
  std::uint16_t src_port;  // 0 draws one per source
  std::uint16_t dst_port;
  std::uint8_t flags;
  double bpp;
};

AttackTemplate attack_template(AnomalyKind k, std::size_t idx) {
  const auto victim_port = static_cast<std::uint16_t>(40000 + idx);
  switch (k) {
    case AnomalyKind::ntp_amp: return {proto::udp, 123, victim_port, 0, 468};
    case AnomalyKind::dns_amp: return {proto::udp, 53, victim_port, 0, 1400};
    case AnomalyKind::icmp_flood: return {proto::icmp, 0, 0, 0, 84};
    case AnomalyKind::syn_flood: return {proto::tcp, 0, 80, tcp_flag::syn, 60};
    case AnomalyKind::other_bandwidth: break;
  }
  return {proto::udp, 0, static_cast<std::uint16_t>(27000 + idx), 0, 1200};
}

StreamKind stream_for(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::ntp_amp: return StreamKind::ntp;
    case AnomalyKind::dns_amp: return StreamKind::dns;
    case AnomalyKind::icmp_flood: return StreamKind::icmp;
    case AnomalyKind::syn_flood: return StreamKind::syn_synack;
    case AnomalyKind::other_bandwidth: break;
  }
  return StreamKind::overall;
}

Ipv4 victim_address(const Layout& L, const AnomalySpec& a) {
  return L.traffic[L.org_index.at(a.victim)].front().base() | 77u;
}

void generate_day(const Layout& L, std::int64_t day, DayOutput& out) {
  const auto& spec = *L.spec;
  const auto& cal = spec.calendar;
  const Date date = date_from_days(day);
  const Millis day_start = cal.day_start_utc(date);
  const Millis day_end = day_start + kDay;
  const double sigma = spec.noise;
  out.mg_bytes.assign(L.mg.size(), 0);

  for (std::size_t si = 0; si < L.series.size(); ++si) {
    const auto& s = L.series[si];
    std::mt19937_64 rng(mix(spec.seed, kTagSeries, mix(static_cast<std::uint64_t>(day), si)));
    std::normal_distribution<double> z;
    Emitter em(out, rng);
    for (Millis t = day_start; t < day_end; t += kBinMs) {
      const double expected = series_expected(s, t, L);
      if (expected <= 0) continue;
      const double noisy = expected * std::exp(sigma * z(rng) - 0.5 * sigma * sigma);
      const double per_flow = noisy / double(s.flows_per_bin);
      for (std::size_t k = 0; k < s.flows_per_bin; ++k) {
        const Millis start = em.uniform_time(t, t + kBinMs);
        const Millis end = start + static_cast<Millis>(rng() % 60000);
        const Ipv4 c = em.address(s.client);
        const Ipv4 v = em.address(s.server);
        const auto& pw = em.port(s.server_ports);
        const auto cp = em.between(s.client_port_lo, s.client_port_hi);
        em.emit(start, end, pw.proto, c, cp, v, pw.port, per_flow * (1.0 - s.response_share), s.bpp, s.req_flags, s.rate);
        em.emit(start, end, pw.proto, v, pw.port, c, cp, per_flow * s.response_share, s.bpp, s.resp_flags, s.rate);
      }
    }
  }

  for (std::size_t ai = 0; ai < spec.anomalies.size(); ++ai) {
    const auto& a = spec.anomalies[ai];
    const Millis a_end = a.start + a.duration;
    if (a_end <= day_start || a.start >= day_end) continue;
    std::mt19937_64 rng(mix(spec.seed, kTagAnomaly, mix(static_cast<std::uint64_t>(day), ai)));
    Emitter em(out, rng);
    const auto tmpl = attack_template(a.kind, ai);
    const auto stream = stream_for(a.kind);
    const Ipv4 victim = victim_address(L, a);
    const auto rate = L.rate_of(a.victim);
    for (Millis t = std::max(a.start, day_start); t < std::min(a_end, day_end); t += kBinMs) {
      double volume = (a.zeta - 1.0) * stream_expected(L, stream, floor_div(t, kBinMs));
      if (counts_packets(stream)) volume *= tmpl.bpp;
      const double per_source = volume / double(a.sources);
      for (std::size_t j = 0; j < a.sources; ++j) {
        const PrefixId src_prefix = L.pool[(ai * 61 + j * 7 + 5) % L.pool.size()];
        const Ipv4 src = src_prefix.base() | static_cast<Ipv4>(1 + (j % 250));
        const auto sport = tmpl.src_port ? tmpl.src_port : static_cast<std::uint16_t>(1024 + j);
        const Millis start = t + static_cast<Millis>(rng() % 1000);
        em.emit(start, start + kBinMs - 2000, tmpl.proto, src, sport, victim, tmpl.dst_port, per_source, tmpl.bpp,
                tmpl.flags, rate);
      }
    }
  }

  const auto day_of = [&](const Date& d) { return days_since_epoch(d); };
  for (std::size_t li = 0; li < L.live.size(); ++li) {
    const auto& lp = L.live[li];
    const auto period = period_of(date, cal);
    double hosts = lp.plan->hosts_before;
    if (period == Period::after) {
      hosts = lp.plan->hosts_after;
    } else if (period == Period::transition) {
      const double frac = double(day - day_of(cal.transition.first) + 1) / double(cal.transition.days() + 1);
      hosts = lp.plan->hosts_before + (lp.plan->hosts_after - lp.plan->hosts_before) * frac;
    }
    std::mt19937_64 rng(mix(spec.seed, kTagLiveness, mix(static_cast<std::uint64_t>(day), li)));
    Emitter em(out, rng);
    const double spread = std::uniform_real_distribution<double>(-lp.plan->jitter, lp.plan->jitter)(rng);
    const int n = std::clamp(static_cast<int>(std::lround(hosts * (1.0 + spread))), 1, 254);
    std::array<int, 254> octets;
    std::iota(octets.begin(), octets.end(), 1);
    for (int i = 0; i < n; ++i) {
      std::swap(octets[i], octets[i + static_cast<int>(rng() % static_cast<std::uint64_t>(254 - i))]);
      const Ipv4 host = lp.prefix.base() | static_cast<Ipv4>(octets[i]);
      const Ipv4 server = L.pool[(li * 11 + 3) % L.pool.size()].base() | 10u;
      const Millis start = em.uniform_time(day_start, day_end - kMinute);
      em.emit(start, start + 30000, proto::tcp, host, em.between(32768, 60999), server, 443, 3e6, 1000, kTcpSession,
              lp.rate);
    }
  }

  if (static_cast<std::size_t>(day - day_of(cal.before.first)) < spec.mg.active_days && !L.mg.empty()) {
    const auto& clients = L.traffic[L.org_index.at(spec.mg.clients)];
    const auto rate = L.rate_of(spec.mg.clients);
    for (std::size_t mi = 0; mi < L.mg.size(); ++mi) {
      const auto& srv = L.mg[mi];
      const auto& prof = L.profile(srv.app);
      std::mt19937_64 rng(mix(spec.seed, kTagMg, mix(static_cast<std::uint64_t>(day), mi)));
      Emitter em(out, rng);
      const auto before = out.true_bytes;
      for (Millis h = day_start; h < day_end; h += kHour) {
        const double f = std::uniform_real_distribution<double>(0.8, 1.2)(rng);
        const auto n = static_cast<std::size_t>(std::lround(double(spec.mg.flows_per_hour) * f));
        for (std::size_t k = 0; k < n; ++k) {
          const Millis start = em.uniform_time(h, h + kHour - kMinute);
          const Millis end = start + static_cast<Millis>(rng() % 50000);
          const Ipv4 c = clients[rng() % clients.size()].base() | static_cast<Ipv4>(20 + rng() % 235);
          const Ipv4 v = srv.prefix.base() | static_cast<Ipv4>(1 + rng() % 20);
          const auto& pw = em.port(prof.ports);
          const auto cp = em.between(32768, 60999);
          const auto flags = pw.proto == proto::tcp ? kTcpSession : std::uint8_t{0};
          em.emit(start, end, pw.proto, c, cp, v, pw.port, srv.scale * 0.4, 900, flags, rate);
          em.emit(start, end, pw.proto, v, pw.port, c, cp, srv.scale * 0.6, 900, flags, rate);
        }
      }
      out.mg_bytes[mi] += out.true_bytes - before;
    }
  }

  std::stable_sort(out.flows.begin(), out.flows.end(),
                   [](const FlowRecord& a, const FlowRecord& b) { return a.ts_start < b.ts_start; });
}

Hours parse_hours(const std::string& s) {
  if (s == "work") return Hours::work;
  if (s == "rest") return Hours::rest;
  throw input_error("hours must be work or rest, got '" + s + "'");
}

AppLabel parse_app(const std::string& s) {
  auto l = parse_label(s);
  if (!l) throw input_error("unknown application label '" + s + "'");
  return *l;
}

LivenessCategory parse_liveness(const std::string& s) {
  if (s == "inc") return LivenessCategory::inc;
  if (s == "same") return LivenessCategory::same;
  if (s == "dec") return LivenessCategory::dec;
  throw input_error("liveness category must be inc, same or dec, got '" + s + "'");
}

MgRole parse_role(const std::string& s) {
  for (auto r : {MgRole::ground_truth, MgRole::hidden, MgRole::decoy}) {
    if (to_string(r) == s) return r;
  }
  throw input_error("mg role must be ground_truth, hidden or decoy, got '" + s + "'");
}

std::uint8_t parse_proto(const std::string& s) {
  if (s == "tcp") return proto::tcp;
  if (s == "udp") return proto::udp;
  throw input_error("proto must be tcp or udp, got '" + s + "'");
}

DateInterval parse_interval(const json& j) {
  if (!j.is_array() || j.size() != 2) throw input_error("date interval must be [first, last]");
  return {parse_date(j[0].get<std::string>()), parse_date(j[1].get<std::string>())};
}

std::string prefix_text(PrefixId p) { return p.to_string(); }

}  // namespace

std::vector<AppProfile> default_profiles() {
  auto range = [](std::vector<PortWeight>& v, std::uint8_t pr, std::uint16_t lo, std::uint16_t hi, double w) {
    for (std::uint32_t p = lo; p <= hi; ++p) v.push_back({pr, static_cast<std::uint16_t>(p), w});
  };
  std::vector<AppProfile> out;
  {
    AppProfile p{AppLabel::zoom, {}};
    range(p.ports, proto::udp, 8801, 8810, 6);
    p.ports.push_back({proto::tcp, 443, 10});
    range(p.ports, proto::udp, 3478, 3479, 5);
    out.push_back(p);
  }
  {
    AppProfile p{AppLabel::webex, {}};
    p.ports.push_back({proto::udp, 9000, 20});
    p.ports.push_back({proto::udp, 5004, 15});
    p.ports.push_back({proto::tcp, 443, 15});
    range(p.ports, proto::udp, 9001, 9008, 3);
    out.push_back(p);
  }
  {
    AppProfile p{AppLabel::bluejeans, {}};
    p.ports.push_back({proto::udp, 5000, 20});
    range(p.ports, proto::udp, 5001, 5010, 4);
    p.ports.push_back({proto::tcp, 443, 15});
    p.ports.push_back({proto::udp, 3478, 5});
    out.push_back(p);
  }
  {
    AppProfile p{AppLabel::gmeet, {}};
    range(p.ports, proto::udp, 19302, 19309, 8);
    p.ports.push_back({proto::tcp, 443, 15});
    p.ports.push_back({proto::udp, 3478, 5});
    out.push_back(p);
  }
  {
    AppProfile p{AppLabel::go_to, {}};
    p.ports.push_back({proto::udp, 8200, 25});
    p.ports.push_back({proto::tcp, 443, 20});
    range(p.ports, proto::udp, 3478, 3481, 5);
    p.ports.push_back({proto::udp, 1853, 10});
    out.push_back(p);
  }
  {
    AppProfile p{AppLabel::skype, {}};
    range(p.ports, proto::udp, 3478, 3481, 10);
    p.ports.push_back({proto::tcp, 443, 10});
    range(p.ports, proto::udp, 50000, 50019, 2);
    out.push_back(p);
  }
  {
    AppProfile p{AppLabel::steam, {}};
    range(p.ports, proto::udp, 27015, 27030, 4);
    p.ports.push_back({proto::tcp, 27015, 10});
    p.ports.push_back({proto::tcp, 443, 5});
    p.ports.push_back({proto::udp, 27036, 5});
    out.push_back(p);
  }
  return out;
}

std::string_view to_string(MgRole r) {
  switch (r) {
    case MgRole::hidden: return "hidden";
    case MgRole::decoy: return "decoy";
    case MgRole::ground_truth: break;
  }
  return "ground_truth";
}

void ScenarioSpec::validate() const {
  calendar.validate();
  if (!std::isfinite(noise) || noise < 0) throw input_error("noise must be a finite non-negative number");
  if (sampling_rates.empty()) throw input_error("at least one sampling rate is required");
  for (auto r : sampling_rates) {
    if (r == 0) throw input_error("sampling rates must be positive");
  }
  if (internet_prefixes < 64 || internet_prefixes > 65536) {
    throw input_error("internet_prefixes must be between 64 and 65536");
  }
  std::map<std::string, std::size_t> ids;
  std::map<std::string, std::size_t> used;
  for (std::size_t i = 0; i < orgs.size(); ++i) {
    const auto& o = orgs[i];
    if (o.id.empty()) throw input_error("organization " + std::to_string(i) + " has no id");
    if (!ids.emplace(o.id, i).second) throw input_error("duplicate organization id '" + o.id + "'");
    if (o.prefixes < 1) throw input_error("organization '" + o.id + "' needs at least one prefix");
    if (o.ingest >= sampling_rates.size()) throw input_error("organization '" + o.id + "' has no such ingest point");
    used[o.id] = o.prefixes;
  }
  auto need_org = [&](const std::string& id, bool local, const std::string& what) -> const OrgSpec& {
    auto it = ids.find(id);
    if (it == ids.end()) throw input_error(what + ": unknown organization '" + id + "'");
    if (local && !orgs[it->second].local) throw input_error(what + ": organization '" + id + "' is not local");
    return orgs[it->second];
  };
  const auto profiles = mg.profiles.empty() ? default_profiles() : mg.profiles;
  auto has_profile = [&](AppLabel a) {
    return std::any_of(profiles.begin(), profiles.end(), [&](const AppProfile& p) { return p.app == a && !p.ports.empty(); });
  };
  for (const auto& p : profiles) {
    if (!is_mg(p.app)) throw input_error("port profile for non-mg label " + std::string(to_string(p.app)));
    for (const auto& pw : p.ports) {
      if (pw.weight <= 0) throw input_error("port profile weights must be positive");
    }
  }
  for (const auto& s : mg.servers) {
    const std::string what = "mg server for " + std::string(to_string(s.app));
    if (!is_mg(s.app)) throw input_error(what + ": not an mg application");
    if (!has_profile(s.app)) throw input_error(what + ": no port profile");
    need_org(s.org, false, what);
    if (s.count < 1) throw input_error(what + ": count must be positive");
    used[s.org] += s.count;
  }
  if (mg.active_days > 0 && !mg.servers.empty()) need_org(mg.clients, true, "mg clients");
  for (const auto& m : mix) {
    const std::string what = "mix entry " + m.org + "/" + std::string(to_string(m.label));
    need_org(m.org, true, what);
    if (!m.remote.empty()) need_org(m.remote, false, what);
    if (!(m.multiplier > 0) || !std::isfinite(m.multiplier)) throw input_error(what + ": multiplier must be positive");
    if (!(m.before_bytes_per_hour >= 0)) throw input_error(what + ": volume must be non-negative");
    if (m.flows_per_bin < 1) throw input_error(what + ": flows_per_bin must be positive");
    if (is_mg(m.label)) {
      const bool served = std::any_of(mg.servers.begin(), mg.servers.end(), [&](const MgServerSpec& s) {
        return s.app == m.label && s.role != MgRole::decoy;
      });
      if (!served) throw input_error(what + ": no mg server prefixes for this application");
      if (m.inbound) throw input_error(what + ": mg traffic is always served remotely");
    }
  }
  const auto& bg = background;
  for (double v : {bg.ntp_bytes_per_s, bg.dns_bytes_per_s, bg.icmp_pps, bg.syn_pps}) {
    if (!(v >= 0) || !std::isfinite(v)) throw input_error("background rates must be non-negative");
  }
  if (bg.ntp_bytes_per_s + bg.dns_bytes_per_s + bg.icmp_pps + bg.syn_pps > 0) {
    need_org(bg.org, true, "background");
    if (bg.flows_per_bin < 1) throw input_error("background: flows_per_bin must be positive");
  }
  for (std::size_t i = 0; i < anomalies.size(); ++i) {
    const auto& a = anomalies[i];
    const std::string what = "anomaly " + std::to_string(i);
    need_org(a.victim, true, what);
    if (!(a.zeta > 1.0) || !std::isfinite(a.zeta)) throw input_error(what + ": zeta must exceed 1");
    if (a.duration <= 0 || a.duration % kBinMs != 0 || a.start % kBinMs != 0) {
      throw input_error(what + ": start and duration must be positive multiples of 5 minutes");
    }
    if (a.start < calendar.observation_start() || a.start + a.duration > calendar.observation_end()) {
      throw input_error(what + ": interval outside the observation window");
    }
    if (a.sources < 1 || a.sources > internet_prefixes) throw input_error(what + ": bad source count");
  }
  for (const auto& l : liveness) {
    const std::string what = "liveness plan for " + l.org;
    need_org(l.org, true, what);
    if (l.hosts_before < 1 || l.hosts_before > 254 || l.hosts_after < 1 || l.hosts_after > 254) {
      throw input_error(what + ": host counts must be within 1..254");
    }
    if (!(l.jitter >= 0 && l.jitter < 1)) throw input_error(what + ": jitter must be within [0, 1)");
    used[l.org] += l.prefixes;
  }
  for (const auto& ip : ips) {
    const std::string what = "tracked address in " + ip.org;
    need_org(ip.org, true, what);
    if (!(ip.multiplier_work > 0) || !(ip.multiplier_rest > 0)) throw input_error(what + ": multipliers must be positive");
    if (is_mg(ip.label) || ip.label == AppLabel::highhigh || ip.label == AppLabel::twoservice ||
        ip.label == AppLabel::noservice) {
      throw input_error(what + ": label must be a port-mapped service");
    }
  }
  if (ips.size() > 50) throw input_error("at most 50 tracked addresses");
  for (const auto& [id, n] : used) {
    if (n > 256) throw input_error("organization '" + id + "' needs more than 256 prefixes");
  }
}

ScenarioSpec ScenarioSpec::from_json_text(const std::string& text) {
  ScenarioSpec s;
  try {
    const json j = json::parse(text);
    s.seed = j.value("seed", s.seed);
    if (j.contains("calendar")) {
      const auto& c = j["calendar"];
      if (c.contains("before")) s.calendar.before = parse_interval(c["before"]);
      if (c.contains("transition")) s.calendar.transition = parse_interval(c["transition"]);
      if (c.contains("after")) s.calendar.after = parse_interval(c["after"]);
      if (c.contains("work_hours")) {
        s.calendar.work_start_hour = c["work_hours"].at(0).get<int>();
        s.calendar.work_end_hour = c["work_hours"].at(1).get<int>();
      }
      s.calendar.timezone_offset = c.value("timezone_offset", s.calendar.timezone_offset);
    }
    s.noise = j.value("noise", s.noise);
    if (j.contains("sampling_rates")) s.sampling_rates = j["sampling_rates"].get<std::vector<std::uint32_t>>();
    if (j.contains("diurnal")) {
      s.diurnal.night = j["diurnal"].value("night", s.diurnal.night);
      s.diurnal.evening = j["diurnal"].value("evening", s.diurnal.evening);
    }
    for (const auto& o : j.value("orgs", json::array())) {
      OrgSpec org;
      org.id = o.at("id").get<std::string>();
      org.name = o.value("name", org.id);
      org.category = parse_category(o.value("category", std::string("unknown")));
      org.prefixes = o.value("prefixes", std::size_t{1});
      org.local = o.value("local", false);
      org.ingest = o.value("ingest", std::size_t{0});
      s.orgs.push_back(org);
    }
    for (const auto& m : j.value("mix", json::array())) {
      MixEntry e;
      e.org = m.at("org").get<std::string>();
      e.label = parse_app(m.at("label").get<std::string>());
      e.hours = parse_hours(m.value("hours", std::string("work")));
      e.before_bytes_per_hour = m.at("before_bytes_per_hour").get<double>();
      e.multiplier = m.value("multiplier", 1.0);
      e.inbound = m.value("inbound", false);
      e.remote = m.value("remote", std::string());
      e.flows_per_bin = m.value("flows_per_bin", std::size_t{1});
      s.mix.push_back(e);
    }
    if (j.contains("mg")) {
      const auto& g = j["mg"];
      s.mg.clients = g.value("clients", std::string());
      s.mg.active_days = g.value("active_days", std::size_t{0});
      s.mg.flows_per_hour = g.value("flows_per_hour", s.mg.flows_per_hour);
      for (const auto& srv : g.value("servers", json::array())) {
        MgServerSpec m;
        m.app = parse_app(srv.at("app").get<std::string>());
        m.org = srv.at("org").get<std::string>();
        m.count = srv.value("count", std::size_t{1});
        m.role = parse_role(srv.value("role", std::string("ground_truth")));
        s.mg.servers.push_back(m);
      }
      for (const auto& p : g.value("profiles", json::array())) {
        AppProfile prof;
        prof.app = parse_app(p.at("app").get<std::string>());
        for (const auto& pw : p.at("ports")) {
          prof.ports.push_back({parse_proto(pw.at("proto").get<std::string>()), pw.at("port").get<std::uint16_t>(),
                                pw.value("weight", 1.0)});
        }
        s.mg.profiles.push_back(prof);
      }
    }
    if (j.contains("background")) {
      const auto& b = j["background"];
      s.background.org = b.value("org", std::string());
      s.background.ntp_bytes_per_s = b.value("ntp_bytes_per_s", 0.0);
      s.background.dns_bytes_per_s = b.value("dns_bytes_per_s", 0.0);
      s.background.icmp_pps = b.value("icmp_pps", 0.0);
      s.background.syn_pps = b.value("syn_pps", 0.0);
      s.background.flows_per_bin = b.value("flows_per_bin", s.background.flows_per_bin);
    }
    for (const auto& a : j.value("anomalies", json::array())) {
      AnomalySpec as;
      as.kind = parse_anomaly_kind(a.at("kind").get<std::string>());
      as.start = parse_timestamp(a.at("start").get<std::string>());
      as.duration = static_cast<Millis>(a.at("duration_min").get<double>() * double(kMinute));
      as.zeta = a.at("zeta").get<double>();
      as.victim = a.at("victim").get<std::string>();
      as.sources = a.value("sources", as.sources);
      s.anomalies.push_back(as);
    }
    for (const auto& l : j.value("liveness", json::array())) {
      LivenessSpec ls;
      ls.org = l.at("org").get<std::string>();
      ls.category = parse_liveness(l.at("category").get<std::string>());
      ls.prefixes = l.value("prefixes", std::size_t{1});
      ls.hosts_before = l.at("hosts_before").get<int>();
      ls.hosts_after = l.at("hosts_after").get<int>();
      ls.jitter = l.value("jitter", ls.jitter);
      s.liveness.push_back(ls);
    }
    for (const auto& i : j.value("ips", json::array())) {
      IpPlan p;
      p.org = i.at("org").get<std::string>();
      const auto role = i.value("role", std::string("client"));
      if (role != "client" && role != "server") throw input_error("ip role must be client or server");
      p.role = role == "server" ? IpRole::server : IpRole::client;
      p.label = parse_app(i.value("label", std::string("https")));
      p.before_bytes_per_hour = i.value("before_bytes_per_hour", p.before_bytes_per_hour);
      p.multiplier_work = i.value("multiplier_work", 1.0);
      p.multiplier_rest = i.value("multiplier_rest", 1.0);
      s.ips.push_back(p);
    }
    s.internet_prefixes = j.value("internet_prefixes", s.internet_prefixes);
    s.anonymize = j.value("anonymize", s.anonymize);
  } catch (const json::exception& e) {
    throw input_error(std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

ScenarioSpec ScenarioSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open scenario " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string GroundTruth::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["true_bytes"] = true_bytes;
  j["true_packets"] = true_packets;
  auto& series_j = j["series"] = nlohmann::ordered_json::array();
  for (const auto& s : series) {
    series_j.push_back({{"name", s.name},
                        {"org", s.org},
                        {"label", to_string(s.label)},
                        {"hours", to_string(s.hours)},
                        {"multiplier", s.multiplier}});
  }
  auto& mg_j = j["mg_prefixes"] = nlohmann::ordered_json::array();
  for (const auto& m : mg) {
    mg_j.push_back({{"prefix", prefix_text(m.real)},
                    {"anon", prefix_text(m.anon)},
                    {"app", to_string(m.app)},
                    {"role", to_string(m.role)},
                    {"org", m.org},
                    {"bytes", m.bytes}});
  }
  auto& an_j = j["anomalies"] = nlohmann::ordered_json::array();
  for (const auto& a : anomalies) {
    an_j.push_back({{"kind", to_string(a.kind)},
                    {"start", format_timestamp(a.start)},
                    {"end", format_timestamp(a.end)},
                    {"zeta", a.zeta},
                    {"victim", prefix_text(a.victim_real)},
                    {"victim_anon", prefix_text(a.victim_anon)}});
  }
  auto& lv_j = j["liveness"] = nlohmann::ordered_json::array();
  for (const auto& l : liveness) {
    lv_j.push_back({{"prefix", prefix_text(l.real)}, {"anon", prefix_text(l.anon)}, {"category", to_string(l.category)}});
  }
  auto& ip_j = j["ips"] = nlohmann::ordered_json::array();
  for (const auto& i : ips) {
    ip_j.push_back({{"ip", format_ipv4(i.real)},
                    {"anon", format_ipv4(i.anon)},
                    {"role", to_string(i.role)},
                    {"multiplier_work", i.multiplier_work},
                    {"multiplier_rest", i.multiplier_rest}});
  }
  return j.dump(2) + "\n";
}

PrefixAnonymizer::PrefixAnonymizer(std::uint64_t key) : hi_(65536), hi_inv_(65536), key_(key) {
  std::iota(hi_.begin(), hi_.end(), std::uint16_t{0});
  std::mt19937_64 rng(mix(key, 0xA11011));
  for (std::size_t i = hi_.size() - 1; i > 0; --i) std::swap(hi_[i], hi_[rng() % (i + 1)]);
  for (std::size_t i = 0; i < hi_.size(); ++i) hi_inv_[hi_[i]] = static_cast<std::uint16_t>(i);
}

std::uint8_t PrefixAnonymizer::third(std::uint16_t real_hi, std::uint8_t octet, bool inverse) const {
  std::array<std::uint8_t, 256> perm;
  std::iota(perm.begin(), perm.end(), std::uint8_t{0});
  std::mt19937_64 rng(mix(key_, 0x0C7E7, real_hi));
  for (std::size_t i = 255; i > 0; --i) std::swap(perm[i], perm[rng() % (i + 1)]);
  if (!inverse) return perm[octet];
  return static_cast<std::uint8_t>(std::find(perm.begin(), perm.end(), octet) - perm.begin());
}

PrefixId PrefixAnonymizer::map(PrefixId real) const {
  const auto k = real.key();
  const auto hi = static_cast<std::uint16_t>(k >> 8);
  return PrefixId::from_key((std::uint32_t{hi_[hi]} << 8) | third(hi, static_cast<std::uint8_t>(k & 0xFF), false));
}

PrefixId PrefixAnonymizer::unmap(PrefixId anon) const {
  const auto k = anon.key();
  const auto real_hi = hi_inv_[k >> 8];
  return PrefixId::from_key((std::uint32_t{real_hi} << 8) | third(real_hi, static_cast<std::uint8_t>(k & 0xFF), true));
}

Ipv4 PrefixAnonymizer::map(Ipv4 real) const { return map(PrefixId::of(real)).base() | (real & 0xFF); }
Ipv4 PrefixAnonymizer::unmap(Ipv4 anon) const { return unmap(PrefixId::of(anon)).base() | (anon & 0xFF); }

std::vector<FlowRecord> anonymize(std::span<const FlowRecord> flows, const PrefixAnonymizer& anon) {
  std::unordered_map<std::uint32_t, std::uint32_t> cache;
  auto map_ip = [&](Ipv4 a) {
    auto [it, fresh] = cache.try_emplace(a >> 8, 0);
    if (fresh) it->second = anon.map(PrefixId::of(a)).key();
    return (it->second << 8) | (a & 0xFF);
  };
  std::vector<FlowRecord> out(flows.begin(), flows.end());
  for (auto& f : out) {
    f.src_ip = map_ip(f.src_ip);
    f.dst_ip = map_ip(f.dst_ip);
  }
  return out;
}

Corpus generate(const ScenarioSpec& spec) {
  spec.validate();
  Corpus c;
  c.spec = spec;
  const Layout L = make_layout(c.spec);
  const auto& cal = c.spec.calendar;

  const auto first_day = days_since_epoch(cal.before.first);
  const auto n_days = static_cast<std::size_t>(days_since_epoch(cal.after.last) - first_day + 1);
  std::vector<DayOutput> days(n_days);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t d; (d = next.fetch_add(1)) < n_days;) {
      generate_day(L, first_day + static_cast<std::int64_t>(d), days[d]);
    }
  };
  const auto n_threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 16));
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::size_t total = 0;
  for (const auto& d : days) total += d.flows.size();
  std::vector<FlowRecord> flows;
  flows.reserve(total);
  std::vector<std::uint64_t> mg_bytes(L.mg.size(), 0);
  for (auto& d : days) {
    flows.insert(flows.end(), d.flows.begin(), d.flows.end());
    c.truth.true_bytes += d.true_bytes;
    c.truth.true_packets += d.true_packets;
    for (std::size_t i = 0; i < mg_bytes.size(); ++i) mg_bytes[i] += d.mg_bytes[i];
    d = DayOutput{};
  }

  const PrefixAnonymizer anon(mix(c.spec.seed, 0xA404));
  auto to_anon = [&](PrefixId p) { return c.spec.anonymize ? anon.map(p) : p; };

  c.truth.seed = c.spec.seed;
  for (const auto& m : c.spec.mix) {
    c.truth.series.push_back({m.org + "/" + std::string(to_string(m.label)) + "/" + std::string(to_string(m.hours)),
                              m.org, m.label, m.hours, m.multiplier});
  }
  for (std::size_t i = 0; i < L.mg.size(); ++i) {
    const auto& m = L.mg[i];
    c.truth.mg.push_back({m.prefix, to_anon(m.prefix), m.app, m.role, m.org, mg_bytes[i]});
  }
  for (const auto& a : c.spec.anomalies) {
    const auto victim = PrefixId::of(victim_address(L, a));
    c.truth.anomalies.push_back({a.kind, a.start, a.start + a.duration, a.zeta, victim, to_anon(victim)});
  }
  for (const auto& lp : L.live) c.truth.liveness.push_back({lp.prefix, to_anon(lp.prefix), lp.plan->category});
  for (std::size_t i = 0; i < c.spec.ips.size(); ++i) {
    const auto& ip = c.spec.ips[i];
    const Ipv4 real = L.ip_addrs[i];
    c.truth.ips.push_back({real, c.spec.anonymize ? anon.map(real) : real, ip.role, ip.multiplier_work,
                           ip.multiplier_rest});
  }

  for (std::size_t i = 0; i < c.spec.orgs.size(); ++i) {
    const auto& o = c.spec.orgs[i];
    for (const auto& p : L.owned[i]) c.org_rows.push_back({Cidr{p.base(), 24}, o.id, o.name, o.category});
    if (o.local) {
      for (const auto& p : L.owned[i]) c.local_prefixes.push_back(p);
    }
  }
  for (const auto& m : L.mg) {
    if (m.role == MgRole::ground_truth) c.gt_prefixes.emplace_back(m.app, Cidr{m.prefix.base(), 24});
  }
  for (const auto& p : L.profiles) {
    const bool used = std::any_of(L.mg.begin(), L.mg.end(), [&](const MgServer& m) {
      return m.app == p.app && m.role == MgRole::ground_truth;
    });
    if (!used) continue;
    for (const auto& pw : p.ports) {
      if (pw.proto == proto::tcp && pw.port == 443) continue;
      c.gt_ports.emplace_back(p.app, mg::PortRange{pw.proto, pw.port, pw.port});
    }
  }

  if (c.spec.anonymize) {
    std::set<std::uint32_t> seen;
    for (const auto& f : flows) {
      seen.insert(f.src_ip >> 8);
      seen.insert(f.dst_ip >> 8);
    }
    for (const auto& row : c.org_rows) seen.insert(row.prefix.network >> 8);
    for (auto k : seen) {
      const auto real = PrefixId::from_key(k);
      c.anon_map.emplace_back(anon.map(real), real);
    }
    std::sort(c.anon_map.begin(), c.anon_map.end());
    c.flows = anonymize(flows, anon);
  } else {
    c.flows = std::move(flows);
  }
  return c;
}

void write_corpus(const Corpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ostringstream out;
    write_flows(out, c.flows);
    write_file_atomic(dir / "flows.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "prefix,org_id,org_name,category\n";
    for (const auto& r : c.org_rows) {
      out << r.prefix.to_string() << ',' << csv::escape(r.org_id) << ',' << csv::escape(r.org_name) << ','
          << to_string(r.category) << '\n';
    }
    write_file_atomic(dir / "orgs.csv", out.str());
  }
  {
    std::ostringstream out;
    for (const auto& p : c.local_prefixes) out << p.to_string() << '\n';
    write_file_atomic(dir / "local.txt", out.str());
  }
  {
    std::ostringstream out;
    out << "app,cidr\n";
    for (const auto& [app, cidr] : c.gt_prefixes) out << to_string(app) << ',' << cidr.to_string() << '\n';
    write_file_atomic(dir / "gt_prefixes.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "app,proto,port\n";
    for (const auto& [app, r] : c.gt_ports) {
      out << to_string(app) << ',' << (r.proto == proto::tcp ? "tcp" : "udp") << ',' << r.lo;
      if (r.hi != r.lo) out << '-' << r.hi;
      out << '\n';
    }
    write_file_atomic(dir / "gt_ports.csv", out.str());
  }
  if (!c.anon_map.empty()) {
    std::ostringstream out;
    out << "anon,real\n";
    for (const auto& [a, r] : c.anon_map) out << a.to_string() << ',' << r.to_string() << '\n';
    write_file_atomic(dir / "anon_map.csv", out.str());
  }
  write_file_atomic(dir / "ground_truth.json", c.truth.to_json());
}

double expected_stream_volume(const ScenarioSpec& spec, StreamKind stream, std::int64_t bin) {
  const Layout L = make_layout(spec);
  return stream_expected(L, stream, bin);
}

}  // namespace flowshift::synth
