#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "flowshift/net.hpp"
#include "flowshift/time.hpp"

namespace flowshift {

namespace proto {
inline constexpr std::uint8_t icmp = 1;
inline constexpr std::uint8_t tcp = 6;
inline constexpr std::uint8_t udp = 17;
}  // namespace proto

namespace tcp_flag {
inline constexpr std::uint8_t fin = 0x01;
inline constexpr std::uint8_t syn = 0x02;
inline constexpr std::uint8_t rst = 0x04;
inline constexpr std::uint8_t psh = 0x08;
inline constexpr std::uint8_t ack = 0x10;
}  // namespace tcp_flag

// One sampled, unidirectional flow observation as exported by the collector.
struct FlowRecord {
  Millis ts_start = 0;
  Millis ts_end = 0;
  std::uint8_t proto = 0;
  Ipv4 src_ip = 0;
  std::uint16_t src_port = 0;
  Ipv4 dst_ip = 0;
  std::uint16_t dst_port = 0;
  std::uint64_t sampled_packets = 0;
  std::uint64_t sampled_bytes = 0;
  std::uint8_t tcp_flags = 0;
  std::uint32_t sampling_rate = 1;

  bool operator==(const FlowRecord&) const = default;
};

// A record with volumes scaled back up by its sampling rate.
struct UpsampledFlow : FlowRecord {
  std::uint64_t packets = 0;
  std::uint64_t bytes = 0;

  bool operator==(const UpsampledFlow&) const = default;
};

UpsampledFlow upsample(const FlowRecord& rec);

// Batch form; uses the vectorized multiply kernel.
std::vector<UpsampledFlow> upsample(std::span<const FlowRecord> recs);

struct IngestConfig {
  // Accepted sampling rates. Empty accepts any positive rate.
  std::vector<std::uint32_t> declared_rates;
  // Stop at the first malformed line instead of collecting errors.
  bool strict = false;
};

struct ParseError {
  std::size_t line = 0;
  std::string message;
};

struct ParseResult {
  std::vector<FlowRecord> flows;
  std::vector<ParseError> errors;
};

inline constexpr const char* kFlowCsvHeader =
    "ts_start,ts_end,proto,src_ip,src_port,dst_ip,dst_port,packets,bytes,tcp_flags,sampling_rate";

// Reads the flow CSV (header required). Malformed lines are reported with
// their 1-based line number; in strict mode the first one throws.
ParseResult parse_flows(std::istream& in, const IngestConfig& config = {});

// Parses a single data line; throws Error(input) when malformed.
FlowRecord parse_flow_line(std::string_view line, const IngestConfig& config = {});

void write_flow_line(std::ostream& out, const FlowRecord& rec);
void write_flows(std::ostream& out, std::span<const FlowRecord> flows);

enum class BinWidth : Millis {
  five_min = 5 * kMinute,
  hour = kHour,
  day = kDay,
};

constexpr Millis width_ms(BinWidth w) { return static_cast<Millis>(w); }

enum class BinAssign { by_start, proportional };

struct TimeBin {
  std::int64_t index = 0;
  BinWidth width = BinWidth::five_min;

  Millis start() const { return index * width_ms(width); }
  static TimeBin containing(Millis t, BinWidth w) { return {floor_div(t, width_ms(w)), w}; }
  auto operator<=>(const TimeBin&) const = default;
};

struct BinVolume {
  std::uint64_t bytes = 0;
  std::uint64_t packets = 0;
  std::uint64_t flow_count = 0;

  BinVolume& operator+=(const BinVolume& o) {
    bytes += o.bytes;
    packets += o.packets;
    flow_count += o.flow_count;
    return *this;
  }
  bool operator==(const BinVolume&) const = default;
};

// Bins keyed by index on a UTC-aligned grid of one width.
using BinMap = std::map<std::int64_t, BinVolume>;

// Assigns up-sampled volume to bins. Proportional mode splits a flow by
// overlap duration using largest-remainder rounding so totals stay exact;
// flow_count always lands in the start bin.
BinMap bin_volume(std::span<const UpsampledFlow> flows, BinWidth width,
                  BinAssign assign = BinAssign::by_start);

// Field-wise addition; partitioned ingestion merges per-partition maps.
void merge_into(BinMap& into, const BinMap& from);

}  // namespace flowshift
