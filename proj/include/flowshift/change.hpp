#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowshift/calendar.hpp"
#include "flowshift/org.hpp"
#include "flowshift/stats.hpp"
#include "flowshift/store.hpp"

namespace flowshift {

enum class Granularity { five_min, daily };
enum class HoursFilter { work, rest, all };

std::string_view to_string(HoursFilter h);

struct SeriesPoint {
  Millis t = 0;
  double value = 0.0;
};

struct Series {
  std::string key;
  Granularity granularity = Granularity::five_min;
  HoursFilter hours = HoursFilter::all;
  std::vector<SeriesPoint> points;  // strictly increasing t
};

// Every 5-minute bin of the observation window whose hours class passes
// the filter; bins missing from `volume` count as zero.
Series five_min_series(const std::map<std::int64_t, double>& volume, const StudyCalendar& cal,
                       HoursFilter hours, std::string key = {});

// One point per local day of the observation window: the sum of the
// 5-minute bins passing the filter. Days with no such bin are skipped.
Series daily_series(const std::map<std::int64_t, double>& volume, const StudyCalendar& cal, HoursFilter hours,
                    std::string key = {});

enum class RatioBasis { median, mean };
enum class RatioTag { normal, new_traffic, undefined };

struct ChangeResult {
  Direction direction = Direction::none;
  double p_less = 0.5;
  double p_greater = 0.5;
  double ratio = 1.0;  // after / before
  RatioBasis basis = RatioBasis::median;
  RatioTag tag = RatioTag::normal;
  double before_stat = 0.0;
  double after_stat = 0.0;
  std::size_t n_before = 0;
  std::size_t n_after = 0;
};

// Percentage with one decimal, "new" for traffic that appeared from
// nothing, empty when undefined.
std::string format_ratio(const ChangeResult& r);

// Splits the series by period (transition and outside points dropped),
// tests with WMW and reports the after/before ratio of medians (5-minute
// series) or means (daily series).
ChangeResult quantify(const Series& series, const StudyCalendar& cal, double alpha);

struct AppChangeRow {
  std::string name;
  Selector selector;
  double volume_share = 0.0;  // share of total bytes in the before period
  bool relevant = false;      // >= 1% of daily volume on >= 1/7 of the days of either period
  ChangeResult work;
  ChangeResult rest;
};

struct AppChangeTable {
  std::vector<AppChangeRow> rows;
  std::vector<std::string> omitted;  // labels with no traffic at all
};

// One row per application label plus the coarse syn/icmp/otprot classes.
AppChangeTable app_change_table(const LabeledVolumeStore& store, const StudyCalendar& cal, double alpha);

inline constexpr double kTerabyte = 1e12;

struct OrgLabelCell {
  std::string org_id;
  std::string label;
  ChangeResult change;
  double daily_change_bytes = 0.0;  // mean after - mean before
  std::vector<SeriesPoint> daily;   // bytes per local day
};

struct PeerShiftCell {
  std::string org_id;
  OrgCategory remote = OrgCategory::unknown;
  Orientation orientation = Orientation::inbound;
  ChangeResult change;
  double daily_change_bytes = 0.0;
  std::vector<SeriesPoint> daily;
};

struct OrgShiftTables {
  std::vector<OrgLabelCell> inbound;   // flows initiated to local organizations
  std::vector<OrgLabelCell> outbound;  // flows initiated by local organizations
  std::vector<PeerShiftCell> peers;    // totals per remote organization category
};

// Cells survive only with a detected direction and a daily change of at
// least `min_daily_change` bytes. Flows of unknown direction are left out.
OrgShiftTables org_shift_tables(const LabeledVolumeStore& store, const StudyCalendar& cal, double alpha,
                                double min_daily_change = kTerabyte);

enum class LivenessCategory { inc, same, dec };
std::string_view to_string(LivenessCategory c);

struct LivenessRecord {
  PrefixId prefix;
  std::string org_id;
  OrgCategory org_category = OrgCategory::unknown;
  std::vector<std::pair<Date, int>> daily;  // distinct live local addresses, before and after days
  ChangeResult change;
  LivenessCategory category = LivenessCategory::same;
};

struct LivenessSummaryRow {
  std::string name;  // organization category, or "all"

  std::array<std::size_t, 3> counts{};  // inc, same, dec
  std::array<double, 3> percent{};
};

struct LivenessReport {
  std::vector<LivenessRecord> records;
  std::vector<LivenessSummaryRow> summary;  // per org category present, then "all"
  std::size_t inactive_prefixes = 0;
};

// Per local /24: distinct local-endpoint addresses per day, tested before
// against after. Prefixes never seen in either period are only counted.
LivenessReport liveness_analysis(std::span<const FlowRecord> flows, const PrefixDirectory& dir,
                                 const StudyCalendar& cal, double alpha);

struct IpReport {
  Ipv4 ip = 0;
  IpRoleResult role;
  ChangeResult work;
  ChangeResult rest;
  std::vector<SeriesPoint> hourly;  // bytes per hour with the address as either endpoint
  std::vector<SeriesPoint> weekly;  // bytes per 7-day block starting at the observation start
};

// Work/rest changes use daily sums of the address's bytes (mean ratio).
IpReport ip_change_report(Ipv4 ip, std::span<const DirectedFlow> flows, const StudyCalendar& cal,
                          const ServicePorts& svc, double alpha, double role_threshold = 0.5);

}  // namespace flowshift
