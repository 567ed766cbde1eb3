#include "flowshift/flow.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <string>

#include "flowshift/error.hpp"
#include "flowshift/kernels.hpp"

namespace flowshift {
namespace {

template <typename T>
T parse_uint(std::string_view field, const char* name, std::uint64_t max) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw input_error(std::string("bad ") + name + " '" + std::string(field) + "'");
  }
  if (value > max) throw input_error(std::string(name) + " out of range: " + std::string(field));
  return static_cast<T>(value);
}

constexpr std::size_t kFields = 11;

}  // namespace

UpsampledFlow upsample(const FlowRecord& rec) {
  UpsampledFlow up;
  static_cast<FlowRecord&>(up) = rec;
  up.packets = rec.sampled_packets * rec.sampling_rate;
  up.bytes = rec.sampled_bytes * rec.sampling_rate;
  return up;
}

std::vector<UpsampledFlow> upsample(std::span<const FlowRecord> recs) {
  std::vector<UpsampledFlow> out(recs.size());
  constexpr std::size_t kBlock = 1024;
  std::array<std::uint64_t, kBlock> pk, by, upk, uby;
  std::array<std::uint32_t, kBlock> rate;
  for (std::size_t base = 0; base < recs.size(); base += kBlock) {
    std::size_t n = std::min(kBlock, recs.size() - base);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = recs[base + i];
      pk[i] = r.sampled_packets;
      by[i] = r.sampled_bytes;
      rate[i] = r.sampling_rate;
    }
    kernels::scale_u64({pk.data(), n}, {rate.data(), n}, {upk.data(), n});
    kernels::scale_u64({by.data(), n}, {rate.data(), n}, {uby.data(), n});
    for (std::size_t i = 0; i < n; ++i) {
      auto& u = out[base + i];
      static_cast<FlowRecord&>(u) = recs[base + i];
      u.packets = upk[i];
      u.bytes = uby[i];
    }
  }
  return out;
}

FlowRecord parse_flow_line(std::string_view line, const IngestConfig& config) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::array<std::string_view, kFields> f;
  std::size_t count = 0;
  std::size_t pos = 0;
  while (true) {
    auto comma = line.find(',', pos);
    if (count == kFields) throw input_error("too many fields");
    f[count++] = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (count != kFields) {
    throw input_error("expected 11 fields, found " + std::to_string(count));
  }
  FlowRecord r;
  r.ts_start = parse_timestamp(f[0]);
  r.ts_end = parse_timestamp(f[1]);
  r.proto = parse_uint<std::uint8_t>(f[2], "proto", 255);
  r.src_ip = parse_ipv4(f[3]);
  r.src_port = parse_uint<std::uint16_t>(f[4], "src_port", 65535);
  r.dst_ip = parse_ipv4(f[5]);
  r.dst_port = parse_uint<std::uint16_t>(f[6], "dst_port", 65535);
  r.sampled_packets = parse_uint<std::uint64_t>(f[7], "packets", UINT64_MAX);
  r.sampled_bytes = parse_uint<std::uint64_t>(f[8], "bytes", UINT64_MAX);
  r.tcp_flags = parse_uint<std::uint8_t>(f[9], "tcp_flags", 255);
  // Signed parse so "-1" reports as nonpositive rather than malformed.
  {
    std::int64_t rate = 0;
    auto s = f[10];
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), rate);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw input_error("bad sampling_rate '" + std::string(s) + "'");
    }
    if (rate <= 0) throw input_error("nonpositive sampling rate");
    if (rate > UINT32_MAX) throw input_error("sampling rate out of range");
    r.sampling_rate = static_cast<std::uint32_t>(rate);
  }
  if (r.ts_start > r.ts_end) throw input_error("ts_start after ts_end");
  if (r.sampled_packets < 1) throw input_error("flow with zero packets");
  if (r.sampled_bytes < r.sampled_packets) throw input_error("fewer bytes than packets");
  if (!config.declared_rates.empty() &&
      std::find(config.declared_rates.begin(), config.declared_rates.end(), r.sampling_rate) ==
          config.declared_rates.end()) {
    throw input_error("undeclared sampling rate " + std::to_string(r.sampling_rate));
  }
  return r;
}

ParseResult parse_flows(std::istream& in, const IngestConfig& config) {
  ParseResult result;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!header_seen) {
      std::string_view h = line;
      if (!h.empty() && h.back() == '\r') h.remove_suffix(1);
      if (h.empty()) continue;
      if (h != kFlowCsvHeader) {
        ParseError err{lineno, "missing or unexpected header"};
        if (config.strict) throw input_error("line " + std::to_string(lineno) + ": " + err.message);
        result.errors.push_back(std::move(err));
        return result;
      }
      header_seen = true;
      continue;
    }
    if (line.empty() || line == "\r") continue;
    try {
      result.flows.push_back(parse_flow_line(line, config));
    } catch (const Error& e) {
      if (config.strict) throw input_error("line " + std::to_string(lineno) + ": " + e.what());
      result.errors.push_back({lineno, e.what()});
    }
  }
  return result;
}

void write_flow_line(std::ostream& out, const FlowRecord& r) {
  out << format_timestamp(r.ts_start) << ',' << format_timestamp(r.ts_end) << ','
      << unsigned(r.proto) << ',' << format_ipv4(r.src_ip) << ',' << r.src_port << ','
      << format_ipv4(r.dst_ip) << ',' << r.dst_port << ',' << r.sampled_packets << ','
      << r.sampled_bytes << ',' << unsigned(r.tcp_flags) << ',' << r.sampling_rate << '\n';
}

void write_flows(std::ostream& out, std::span<const FlowRecord> flows) {
  out << kFlowCsvHeader << '\n';
  for (const auto& r : flows) write_flow_line(out, r);
}

BinMap bin_volume(std::span<const UpsampledFlow> flows, BinWidth width, BinAssign assign) {
  BinMap bins;
  const Millis w = width_ms(width);
  for (const auto& f : flows) {
    const std::int64_t first = floor_div(f.ts_start, w);
    const std::int64_t last = f.ts_end > f.ts_start ? floor_div(f.ts_end - 1, w) : first;
    bins[first].flow_count += 1;
    if (assign == BinAssign::by_start || first == last || f.ts_end == f.ts_start) {
      auto& b = bins[first];
      b.bytes += f.bytes;
      b.packets += f.packets;
      continue;
    }
    // Largest-remainder split: floor shares first, then hand out the
    // leftover units to the largest fractional parts (earlier bin on ties).
    const auto duration = static_cast<unsigned __int128>(f.ts_end - f.ts_start);
    struct Share {
      std::int64_t bin;
      std::uint64_t bytes, packets;
      unsigned __int128 rem_bytes, rem_packets;
    };
    std::vector<Share> shares;
    std::uint64_t given_bytes = 0, given_packets = 0;
    for (std::int64_t b = first; b <= last; ++b) {
      Millis lo = std::max(f.ts_start, b * w);
      Millis hi = std::min(f.ts_end, (b + 1) * w);
      auto overlap = static_cast<unsigned __int128>(hi - lo);
      unsigned __int128 nb = static_cast<unsigned __int128>(f.bytes) * overlap;
      unsigned __int128 np = static_cast<unsigned __int128>(f.packets) * overlap;
      Share s{b, static_cast<std::uint64_t>(nb / duration), static_cast<std::uint64_t>(np / duration),
              nb % duration, np % duration};
      given_bytes += s.bytes;
      given_packets += s.packets;
      shares.push_back(s);
    }
    auto distribute = [&](std::uint64_t leftover, auto rem_of, auto add_to) {
      std::vector<std::size_t> order(shares.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return rem_of(shares[a]) > rem_of(shares[b]); });
      for (std::size_t i = 0; i < leftover; ++i) add_to(shares[order[i % order.size()]]);
    };
    distribute(
        f.bytes - given_bytes, [](const Share& s) { return s.rem_bytes; },
        [](Share& s) { ++s.bytes; });
    distribute(
        f.packets - given_packets, [](const Share& s) { return s.rem_packets; },
        [](Share& s) { ++s.packets; });
    for (const auto& s : shares) {
      auto& b = bins[s.bin];
      b.bytes += s.bytes;
      b.packets += s.packets;
    }
  }
  return bins;
}

void merge_into(BinMap& into, const BinMap& from) {
  for (const auto& [idx, vol] : from) into[idx] += vol;
}

}  // namespace flowshift
