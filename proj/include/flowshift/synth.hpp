#pragma once

// Synthetic sampled-flow corpora with known ground truth: diurnal app mixes
// whose volumes shift by planted multipliers after the transition,
// graphlet-profiled mg servers, per-prefix liveness plans, tracked
// addresses and scheduled volumetric anomalies.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flowshift/anomaly.hpp"
#include "flowshift/calendar.hpp"
#include "flowshift/change.hpp"
#include "flowshift/flow.hpp"
#include "flowshift/labels.hpp"
#include "flowshift/mg.hpp"
#include "flowshift/org.hpp"

namespace flowshift::synth {

struct DiurnalShape {
  // Multipliers on the rest-hours volume; work hours are flat.
  double night = 0.6;    // 00:00-06:00
  double evening = 1.5;  // 20:00-22:00
};

struct OrgSpec {
  std::string id;
  std::string name;
  OrgCategory category = OrgCategory::unknown;
  std::size_t prefixes = 1;  // /24s carrying the org's regular traffic
  bool local = false;
  std::size_t ingest = 0;    // index into ScenarioSpec::sampling_rates
};

// One planted volume series: traffic of `label` for a local organization
// in one hours class.
struct MixEntry {
  std::string org;
  AppLabel label = AppLabel::https;
  Hours hours = Hours::work;
  double before_bytes_per_hour = 0.0;  // mean over the class in the before period
  double multiplier = 1.0;             // after / before
  bool inbound = false;                // local side serves
  std::string remote;                  // remote org; empty uses the internet pool
  std::size_t flows_per_bin = 1;
};

struct PortWeight {
  std::uint8_t proto = proto::udp;
  std::uint16_t port = 0;
  double weight = 1.0;
};

struct AppProfile {
  AppLabel app = AppLabel::zoom;
  std::vector<PortWeight> ports;
};

// Built-in profiles for the seven mg applications. They share ports (443,
// 3478) but differ in the rest of their port sets.
std::vector<AppProfile> default_profiles();

enum class MgRole { ground_truth, hidden, decoy };
std::string_view to_string(MgRole r);

struct MgServerSpec {
  AppLabel app = AppLabel::zoom;
  std::string org;
  std::size_t count = 1;
  MgRole role = MgRole::ground_truth;
};

struct MgSpec {
  std::vector<AppProfile> profiles;  // empty selects default_profiles()
  std::vector<MgServerSpec> servers;
  std::string clients;               // local org whose prefixes act as clients
  std::size_t active_days = 0;       // profiled traffic on the first N days; 0 disables it
  std::size_t flows_per_hour = 40;   // connections per server prefix and hour (two flows each)
};

// Flat infrastructure traffic feeding the anomaly monitor streams.
struct BackgroundSpec {
  double ntp_bytes_per_s = 0.0;  // responses from port 123
  double dns_bytes_per_s = 0.0;  // responses from port 53
  double icmp_pps = 0.0;         // echo request and reply
  double syn_pps = 0.0;          // SYN-only probes
  std::string org;               // local org receiving it
  std::size_t flows_per_bin = 4;
};

struct AnomalySpec {
  AnomalyKind kind = AnomalyKind::ntp_amp;
  Millis start = 0;
  Millis duration = 0;
  double zeta = 3.0;
  std::string victim;        // local org
  std::size_t sources = 60;  // distinct source /24s
};

struct LivenessSpec {
  std::string org;
  LivenessCategory category = LivenessCategory::same;
  std::size_t prefixes = 1;
  int hosts_before = 40;
  int hosts_after = 40;
  double jitter = 0.1;  // relative day-to-day spread of the host count
};

struct IpPlan {
  std::string org;
  IpRole role = IpRole::client;
  AppLabel label = AppLabel::https;
  double before_bytes_per_hour = 1e8;
  double multiplier_work = 1.0;
  double multiplier_rest = 1.0;
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  StudyCalendar calendar;
  double noise = 0.1;  // log-normal sigma per series and bin
  std::vector<std::uint32_t> sampling_rates{100};
  DiurnalShape diurnal;
  std::vector<OrgSpec> orgs;
  std::vector<MixEntry> mix;
  MgSpec mg;
  BackgroundSpec background;
  std::vector<AnomalySpec> anomalies;
  std::vector<LivenessSpec> liveness;
  std::vector<IpPlan> ips;
  std::size_t internet_prefixes = 512;
  bool anonymize = true;

  // Throws Error(input) describing the first problem found.
  void validate() const;

  static ScenarioSpec from_json_text(const std::string& text);
  static ScenarioSpec load(const std::filesystem::path& path);
};

struct SeriesTruth {
  std::string name;  // org/label/hours
  std::string org;
  AppLabel label = AppLabel::https;
  Hours hours = Hours::work;
  double multiplier = 1.0;
};

struct MgTruth {
  PrefixId real;
  PrefixId anon;
  AppLabel app = AppLabel::zoom;
  MgRole role = MgRole::ground_truth;
  std::string org;
  std::uint64_t bytes = 0;  // true (unsampled) bytes generated
};

struct AnomalyTruth {
  AnomalyKind kind = AnomalyKind::ntp_amp;
  Millis start = 0;
  Millis end = 0;
  double zeta = 0.0;
  PrefixId victim_real;
  PrefixId victim_anon;
};

struct LivenessTruth {
  PrefixId real;
  PrefixId anon;
  LivenessCategory category = LivenessCategory::same;
};

struct IpTruth {
  Ipv4 real = 0;
  Ipv4 anon = 0;
  IpRole role = IpRole::client;
  double multiplier_work = 1.0;
  double multiplier_rest = 1.0;
};

struct GroundTruth {
  std::uint64_t seed = 0;
  std::vector<SeriesTruth> series;
  std::vector<MgTruth> mg;
  std::vector<AnomalyTruth> anomalies;
  std::vector<LivenessTruth> liveness;
  std::vector<IpTruth> ips;
  std::uint64_t true_bytes = 0;    // before sampling, all emitted flows
  std::uint64_t true_packets = 0;

  std::string to_json() const;
};

// Keyed bijection on /24 prefixes: the /16 is permuted as a whole and the
// third octet by a per-/16 permutation, so prefixes sharing a /16 keep
// sharing one. A stand-in for prefix-preserving schemes, not CryptoPAN.
class PrefixAnonymizer {
 public:
  explicit PrefixAnonymizer(std::uint64_t key);

  PrefixId map(PrefixId real) const;
  PrefixId unmap(PrefixId anon) const;
  Ipv4 map(Ipv4 real) const;
  Ipv4 unmap(Ipv4 anon) const;

 private:
  std::vector<std::uint16_t> hi_;      // /16 permutation
  std::vector<std::uint16_t> hi_inv_;
  std::uint64_t key_;

  std::uint8_t third(std::uint16_t real_hi, std::uint8_t octet, bool inverse) const;
};

struct Corpus {
  std::vector<FlowRecord> flows;  // time ordered, anonymized when requested
  GroundTruth truth;
  std::vector<PrefixDirectory::Row> org_rows;  // real space
  std::vector<PrefixId> local_prefixes;        // real space
  std::vector<std::pair<AppLabel, Cidr>> gt_prefixes;
  std::vector<std::pair<AppLabel, mg::PortRange>> gt_ports;
  std::vector<std::pair<PrefixId, PrefixId>> anon_map;  // anon -> real, every prefix in the corpus
  ScenarioSpec spec;
};

// Deterministic in the spec's seed; days are generated in parallel and
// concatenated in time order.
Corpus generate(const ScenarioSpec& spec);

// Applies the keyed map to both endpoints of every flow.
std::vector<FlowRecord> anonymize(std::span<const FlowRecord> flows, const PrefixAnonymizer& anon);

// flows.csv, orgs.csv, local.txt, gt_prefixes.csv, gt_ports.csv,
// anon_map.csv (when anonymized) and ground_truth.json.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

// Expected (noise-free) volume of a monitor stream in one 5-minute bin, in
// the stream's unit, from the steady series of the spec, tracked addresses
// included. Liveness and profiled mg traffic are not.
double expected_stream_volume(const ScenarioSpec& spec, StreamKind stream, std::int64_t bin);

}  // namespace flowshift::synth
