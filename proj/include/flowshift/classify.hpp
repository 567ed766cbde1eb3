#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

#include "flowshift/flow.hpp"
#include "flowshift/known_mg.hpp"
#include "flowshift/labels.hpp"
#include "flowshift/org.hpp"

namespace flowshift {

constexpr bool is_syn_only(std::uint8_t flags) { return flags == tcp_flag::syn; }

CoarseClass coarse_class(const FlowRecord& flow);

// Port-based application labels. Defaults are the port lists for the
// applications that dominate volume, plus their non-standard ports.
class PortMap {
 public:
  PortMap() { lookup_.fill(kNone); }
  static PortMap defaults();

  // Reads `label:port,port,...` lines. Listed labels replace their defaults.
  static PortMap from_config(std::istream& in, PortMap base = defaults());

  void set(AppLabel label, std::vector<std::uint16_t> ports);
  const std::vector<std::uint16_t>& ports(AppLabel label) const { return ports_[index_of(label)]; }
  std::optional<AppLabel> label_for(std::uint16_t port) const;

  // 0-1023 plus every mapped port: the twoservice/noservice reference set.
  ServicePorts service_ports() const;

 private:
  static constexpr std::uint8_t kNone = 0xFF;
  std::array<std::vector<std::uint16_t>, kAppLabelCount> ports_;
  std::array<std::uint8_t, 65536> lookup_;
};

// Label rules for a candidate flow, in precedence order:
//   1. an endpoint in the known-mg list takes that application's label
//   2. exactly one endpoint port in the port map and the other above 1023
//   3. both ports above 10,000 -> highhigh
//   4. both ports in the service set -> twoservice
//   5. neither port in the service set -> noservice
// Anything else is unlabeled.
std::optional<AppLabel> app_label(const DirectedFlow& flow, const PortMap& ports, const ServicePorts& svc,
                                  const KnownMgPrefixes* mg);

struct FlowClass {
  CoarseClass coarse = CoarseClass::candidate;
  std::optional<AppLabel> label;  // only for candidates
};

FlowClass classify_flow(const DirectedFlow& flow, const PortMap& ports, const ServicePorts& svc,
                        const KnownMgPrefixes* mg);

}  // namespace flowshift
