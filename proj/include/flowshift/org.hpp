#pragma once

#include <bitset>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "flowshift/flow.hpp"
#include "flowshift/net.hpp"

namespace flowshift {

enum class OrgCategory { education, government, business, isp, hosting, unknown };

std::string_view to_string(OrgCategory c);
OrgCategory parse_category(std::string_view text);

struct Organization {
  std::string id;
  std::string name;
  OrgCategory category = OrgCategory::unknown;
  bool local = false;
};

// Well-known server ports: 0-1023 plus the application ports that live above it.
class ServicePorts {
 public:
  ServicePorts() = default;
  static ServicePorts defaults();

  void add(std::uint16_t port) { set_.set(port); }
  bool contains(std::uint16_t port) const { return set_.test(port); }

 private:
  std::bitset<65536> set_;
};

// Maps /24 prefixes (in flow address space) to organizations. Immutable once
// loaded, so concurrent reads are safe.
class PrefixDirectory {
 public:
  struct Row {
    Cidr prefix;
    std::string org_id;
    std::string org_name;
    OrgCategory category = OrgCategory::unknown;
  };

  PrefixDirectory();

  // Programmatic construction. Overlapping claims resolve longest match
  // first, then first row wins; conflicts are appended to `warnings`.
  static PrefixDirectory build(std::span<const Row> rows, std::span<const PrefixId> local_prefixes,
                               const std::vector<std::pair<PrefixId, PrefixId>>& anon_to_real = {},
                               std::vector<std::string>* warnings = nullptr);

  // Total: unmapped prefixes resolve to the shared unknown organization.
  const Organization& lookup(PrefixId p) const;
  const Organization& lookup(Ipv4 addr) const { return lookup(PrefixId::of(addr)); }
  // Index into organizations(); unmapped prefixes return unknown_index().
  std::size_t org_index(PrefixId p) const;
  std::size_t unknown_index() const { return 0; }

  bool is_local(PrefixId p) const { return local_.contains(p.key()); }
  bool is_local(Ipv4 addr) const { return is_local(PrefixId::of(addr)); }
  std::size_t local_count() const { return local_.size(); }
  std::vector<PrefixId> local_prefixes() const;

  const std::vector<Organization>& organizations() const { return orgs_; }
  std::optional<std::size_t> find_org(std::string_view id) const;

  std::optional<PrefixId> real_of(PrefixId anon) const;
  std::optional<PrefixId> anon_of(PrefixId real) const;

 private:
  std::vector<Organization> orgs_;  // [0] is the unknown organization
  std::unordered_map<std::uint32_t, std::uint32_t> prefix_to_org_;
  std::unordered_set<std::uint32_t> local_;
  std::unordered_map<std::uint32_t, std::uint32_t> anon_to_real_;
  std::unordered_map<std::uint32_t, std::uint32_t> real_to_anon_;
};

struct DirectoryLoad {
  PrefixDirectory directory;
  std::vector<std::string> warnings;
};

// Reads the org_db CSV (prefix,org_id[,org_name],category), the local
// prefix list and an optional anonymization map. Org and local files list
// real prefixes; with an anon map they are translated into flow space.
// Missing files throw Error(input); malformed rows are skipped with a warning.
DirectoryLoad load_directory(const std::filesystem::path& org_db, const std::filesystem::path& local_prefixes,
                             const std::optional<std::filesystem::path>& anon_map = std::nullopt);
DirectoryLoad load_directory(std::istream& org_db, std::istream& local_prefixes, std::istream* anon_map = nullptr);

std::vector<PrefixDirectory::Row> read_org_rows(std::istream& in, std::vector<std::string>& warnings);

// DB-build helper: organizations whose name ends in ".gov" become government.
void apply_gov_suffix_rule(std::vector<PrefixDirectory::Row>& rows);

enum class ServerSide { src, dst, ambiguous };
enum class Orientation { inbound, outbound, local_local, transit };

std::string_view to_string(ServerSide s);
std::string_view to_string(Orientation o);

struct DirectedFlow : UpsampledFlow {
  ServerSide server_side = ServerSide::ambiguous;
  Orientation orientation = Orientation::transit;

  // The endpoint treated as server for orientation purposes. Equals the
  // server side when known; for ambiguous flows it is the lower (port, ip).
  bool src_is_server_like = false;

  Ipv4 server_ip() const { return src_is_server_like ? src_ip : dst_ip; }
  Ipv4 client_ip() const { return src_is_server_like ? dst_ip : src_ip; }
  std::uint16_t server_port() const { return src_is_server_like ? src_port : dst_port; }
  std::uint16_t client_port() const { return src_is_server_like ? dst_port : src_port; }
};

DirectedFlow infer_direction(const UpsampledFlow& flow, const PrefixDirectory& dir, const ServicePorts& svc);
std::vector<DirectedFlow> infer_directions(std::span<const UpsampledFlow> flows, const PrefixDirectory& dir,
                                           const ServicePorts& svc);

enum class IpRole { server, client };
std::string_view to_string(IpRole r);

struct IpRoleResult {
  IpRole role = IpRole::client;
  // Share of the address's sourced bytes sent from a service port to a port above 1023.
  double server_fraction = 0.0;
};

// Throws Error(insufficient_data) when the address has no traffic.
IpRoleResult classify_ip_role(Ipv4 ip, std::span<const DirectedFlow> flows, const ServicePorts& svc,
                              double threshold = 0.5);

}  // namespace flowshift
