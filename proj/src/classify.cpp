#include "flowshift/classify.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <string>

#include "flowshift/csv.hpp"
#include "flowshift/error.hpp"

namespace flowshift {

CoarseClass coarse_class(const FlowRecord& flow) {
  if (flow.proto == proto::icmp) return CoarseClass::icmp;
  if (flow.proto != proto::tcp && flow.proto != proto::udp) return CoarseClass::otprot;
  if (flow.proto == proto::tcp && is_syn_only(flow.tcp_flags)) return CoarseClass::syn;
  return CoarseClass::candidate;
}

PortMap PortMap::defaults() {
  PortMap m;
  m.set(AppLabel::web, {80, 81, 82, 8080, 8090});
  m.set(AppLabel::https, {443, 4433});
  m.set(AppLabel::vpn, {4500, 4501, 4502});
  m.set(AppLabel::email, {25, 110, 995, 143, 993, 2525, 465});
  m.set(AppLabel::ftp, {20, 21});
  m.set(AppLabel::telnet, {23});
  m.set(AppLabel::ssh, {22});
  m.set(AppLabel::unidata, {388});
  m.set(AppLabel::rsync, {873});
  m.set(AppLabel::perfsonar, {5201});
  m.set(AppLabel::dns, {53});
  m.set(AppLabel::ntp, {123});
  return m;
}

void PortMap::set(AppLabel label, std::vector<std::uint16_t> ports) {
  if (is_mg(label) || label == AppLabel::highhigh || label == AppLabel::twoservice ||
      label == AppLabel::noservice) {
    throw input_error("label '" + std::string(to_string(label)) + "' cannot be port-mapped");
  }
  for (auto p : ports_[index_of(label)]) lookup_[p] = kNone;
  std::sort(ports.begin(), ports.end());
  ports.erase(std::unique(ports.begin(), ports.end()), ports.end());
  for (auto p : ports) {
    if (lookup_[p] != kNone && lookup_[p] != index_of(label)) {
      throw input_error("port " + std::to_string(p) + " mapped to both " +
                        std::string(to_string(kAppLabels[lookup_[p]])) + " and " + std::string(to_string(label)));
    }
    lookup_[p] = static_cast<std::uint8_t>(index_of(label));
  }
  ports_[index_of(label)] = std::move(ports);
}

PortMap PortMap::from_config(std::istream& in, PortMap base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::skippable(line)) continue;
    auto colon = line.find(':');
    if (colon == std::string::npos) throw input_error("port map line " + std::to_string(lineno) + ": missing ':'");
    auto label = parse_label(csv::trim(std::string_view(line).substr(0, colon)));
    if (!label) throw input_error("port map line " + std::to_string(lineno) + ": unknown label");
    std::vector<std::uint16_t> ports;
    for (const auto& tok : csv::split(std::string_view(line).substr(colon + 1))) {
      auto t = csv::trim(tok);
      if (t.empty()) continue;
      unsigned v = 0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size() || v > 65535) {
        throw input_error("port map line " + std::to_string(lineno) + ": bad port '" + std::string(t) + "'");
      }
      ports.push_back(static_cast<std::uint16_t>(v));
    }
    base.set(*label, std::move(ports));
  }
  return base;
}

std::optional<AppLabel> PortMap::label_for(std::uint16_t port) const {
  auto v = lookup_[port];
  if (v == kNone) return std::nullopt;
  return kAppLabels[v];
}

ServicePorts PortMap::service_ports() const {
  ServicePorts s;
  for (unsigned p = 0; p <= 1023; ++p) s.add(static_cast<std::uint16_t>(p));
  for (const auto& set : ports_) {
    for (auto p : set) s.add(p);
  }
  return s;
}

std::optional<AppLabel> app_label(const DirectedFlow& flow, const PortMap& ports, const ServicePorts& svc,
                                  const KnownMgPrefixes* mg) {
  if (mg) {
    if (auto app = mg->app_of(PrefixId::of(flow.server_ip()))) return app;
    if (auto app = mg->app_of(PrefixId::of(flow.client_ip()))) return app;
  }
  const auto src_label = ports.label_for(flow.src_port);
  const auto dst_label = ports.label_for(flow.dst_port);
  if (src_label && !dst_label && flow.dst_port > 1023) return src_label;
  if (dst_label && !src_label && flow.src_port > 1023) return dst_label;
  if (flow.src_port > 10000 && flow.dst_port > 10000) return AppLabel::highhigh;
  const bool src_svc = svc.contains(flow.src_port);
  const bool dst_svc = svc.contains(flow.dst_port);
  if (src_svc && dst_svc) return AppLabel::twoservice;
  if (!src_svc && !dst_svc) return AppLabel::noservice;
  return std::nullopt;
}

FlowClass classify_flow(const DirectedFlow& flow, const PortMap& ports, const ServicePorts& svc,
                        const KnownMgPrefixes* mg) {
  FlowClass c;
  c.coarse = coarse_class(flow);
  if (c.coarse == CoarseClass::candidate) c.label = app_label(flow, ports, svc, mg);
  return c;
}

}  // namespace flowshift
