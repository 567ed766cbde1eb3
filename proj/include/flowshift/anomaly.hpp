#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowshift/calendar.hpp"
#include "flowshift/flow.hpp"

namespace flowshift {

enum class AnomalyKind { dns_amp, ntp_amp, icmp_flood, syn_flood, other_bandwidth };
enum class StreamKind { overall, ntp, dns, icmp, syn_synack };

inline constexpr std::array<StreamKind, 5> kStreamKinds{StreamKind::overall, StreamKind::ntp, StreamKind::dns,
                                                         StreamKind::icmp, StreamKind::syn_synack};
inline constexpr std::array<AnomalyKind, 5> kAnomalyKinds{AnomalyKind::dns_amp, AnomalyKind::ntp_amp,
                                                           AnomalyKind::icmp_flood, AnomalyKind::syn_flood,
                                                           AnomalyKind::other_bandwidth};

std::string_view to_string(AnomalyKind k);
std::string_view to_string(StreamKind s);
AnomalyKind parse_anomaly_kind(std::string_view s);

// The anomaly kind a stream's own detections are reported as.
AnomalyKind kind_of(StreamKind s);

// Streams measured in packets; the others in bytes.
bool counts_packets(StreamKind s);

bool in_stream(StreamKind s, const FlowRecord& f);

struct FlowKey {
  std::uint32_t src_prefix = 0;  // address >> 8
  std::uint32_t dst_prefix = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t proto = 0;

  static FlowKey of(const FlowRecord& f);
  auto operator<=>(const FlowKey&) const = default;
};

struct KeyVolume {
  FlowKey key;
  double value = 0.0;
};

inline constexpr Millis kAnomalyBin = 5 * kMinute;
inline constexpr std::int64_t kBinsPerDay = kDay / kAnomalyBin;

struct MonitorStream {
  StreamKind kind = StreamKind::overall;
  std::int64_t first_bin = 0;                // 5-minute bin index of volume[0]
  std::vector<double> volume;                // per-bin total in the stream's unit
  std::vector<std::vector<KeyVolume>> keys;  // per bin, sorted by key

  std::size_t size() const { return volume.size(); }
  double rate(std::size_t i) const { return volume[i] / 300.0; }
};

// Streams over the bins covering [start, end); flows outside are ignored.
// Flows are binned by start time.
std::array<MonitorStream, 5> build_streams(std::span<const UpsampledFlow> flows, Millis start, Millis end);

struct BinInterval {
  std::size_t first = 0;  // inclusive stream-relative bin offsets
  std::size_t last = 0;

  std::size_t bins() const { return last - first + 1; }
  bool overlaps(const BinInterval& o) const { return first <= o.last && o.first <= last; }
  auto operator<=>(const BinInterval&) const = default;
};

// K = mean(delta) * sqrt(F) / stdev(delta) over the F keys active in
// either bin. A zero spread yields +-inf for a nonzero mean and 0 otherwise.
double equilibrium_statistic(std::span<const KeyVolume> prev, std::span<const KeyVolume> next);

struct EquilibriumParams {
  double k_threshold = 3.29;
  std::size_t window = 288;  // longest onset-to-close span in bins
};

// A pair with K above the threshold opens an interval at its second bin, a
// pair below -threshold closes the open interval at its first bin. Adjacent
// same-sign pairs merge. An onset with no close inside the window stands
// alone as a one-bin interval.
std::vector<BinInterval> equilibrium_detect(const MonitorStream& stream, const EquilibriumParams& params = {});

// Ceilings per destination /24, as rates: bytes/s for ntp and dns,
// packets/s for icmp and syn.
struct ThresholdRules {
  double syn_pps = 50e3;
  double icmp_pps = 20e3;
  double ntp_bytes_per_s = 100e6 / 8;
  double dns_bytes_per_s = 100e6 / 8;

  std::optional<double> for_stream(StreamKind s) const;
};

// Bins where any destination /24 exceeds the ceiling. A single quiet bin
// between flagged bins does not close an event. No rule for the overall
// stream, so it yields nothing.
std::vector<BinInterval> threshold_detect(const MonitorStream& stream, const ThresholdRules& rules,
                                          std::vector<std::string>* warnings = nullptr);

struct ExpectedVolumeParams {
  std::size_t short_bins = 6;  // events this long or shorter use the preceding bin
  int history_days = 3;        // days either side for longer events
};

// Expected rate for an interval, or nullopt when no clean history bin
// exists. `exclude` holds detected anomaly intervals to skip.
std::optional<double> expected_volume(const MonitorStream& stream, const BinInterval& interval,
                                      std::span<const BinInterval> exclude, const ExpectedVolumeParams& params = {});

struct AnomalyEvent {
  AnomalyKind kind = AnomalyKind::other_bandwidth;
  Millis start = 0;
  Millis end = 0;
  bool equilibrium = false;
  bool threshold = false;
  double v_peak = 0.0;
  std::optional<double> v_exp;
  std::optional<double> zeta;
  bool confirmed = false;
  std::string note;

  Millis duration() const { return end - start; }
};

// Both detectors, or one detector with zeta of at least 2.
bool corroborated(bool equilibrium, bool threshold, std::optional<double> zeta);

struct StreamCandidates {
  std::vector<BinInterval> equilibrium;
  std::vector<BinInterval> threshold;
};

// Merges candidates into events, ordered by start. Overall-stream intervals
// that overlap an event of a specific stream add the equilibrium detector
// to it; the rest become other_bandwidth events.
std::vector<AnomalyEvent> corroborate(const std::array<MonitorStream, 5>& streams,
                                      const std::array<StreamCandidates, 5>& candidates,
                                      const ExpectedVolumeParams& params = {});

struct AnomalyConfig {
  EquilibriumParams equilibrium;
  ThresholdRules rules;
  ExpectedVolumeParams expected;
};

struct AnomalyReport {
  std::vector<AnomalyEvent> events;
  std::vector<std::string> warnings;
};

// Full detection over the calendar's observation window.
AnomalyReport detect_anomalies(std::span<const UpsampledFlow> flows, const StudyCalendar& cal,
                               const AnomalyConfig& config = {});

void write_event_json(std::ostream& out, const AnomalyEvent& e);

struct AnomalyChangeRow {
  AnomalyKind kind = AnomalyKind::other_bandwidth;
  std::size_t before_count = 0;
  std::size_t after_count = 0;
  double before_per_day = 0.0;
  double after_per_day = 0.0;
  double before_duration_min = 0.0;
  double after_duration_min = 0.0;
  double before_zeta = 0.0;
  double after_zeta = 0.0;
  // after / before; absent when nothing happened before
  std::optional<double> frequency_ratio;
  std::optional<double> duration_ratio;
  std::optional<double> zeta_ratio;
};

// Confirmed events only, placed by the local date of their start. Kinds
// with no events in either period are left out.
std::vector<AnomalyChangeRow> anomaly_change_table(std::span<const AnomalyEvent> events, const StudyCalendar& cal);

}  // namespace flowshift
