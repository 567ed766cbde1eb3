#include "flowshift/org.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>

#include "flowshift/csv.hpp"
#include "flowshift/error.hpp"

namespace flowshift {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw input_error("cannot open " + p.string());
  return in;
}

}  // namespace

std::string_view to_string(OrgCategory c) {
  switch (c) {
    case OrgCategory::education: return "education";
    case OrgCategory::government: return "government";
    case OrgCategory::business: return "business";
    case OrgCategory::isp: return "isp";
    case OrgCategory::hosting: return "hosting";
    case OrgCategory::unknown: break;
  }
  return "unknown";
}

OrgCategory parse_category(std::string_view text) {
  auto t = lower(csv::trim(text));
  if (t == "education") return OrgCategory::education;
  if (t == "government") return OrgCategory::government;
  if (t == "business") return OrgCategory::business;
  if (t == "isp") return OrgCategory::isp;
  if (t == "hosting") return OrgCategory::hosting;
  if (t == "unknown") return OrgCategory::unknown;
  throw input_error("unknown organization category '" + std::string(text) + "'");
}

ServicePorts ServicePorts::defaults() {
  ServicePorts s;
  for (unsigned p = 0; p <= 1023; ++p) s.add(static_cast<std::uint16_t>(p));
  for (std::uint16_t p : {4500, 4501, 4502, 5201, 8080, 8090, 4433, 2525}) s.add(p);
  return s;
}

PrefixDirectory::PrefixDirectory() { orgs_.push_back({"?", "unknown", OrgCategory::unknown, false}); }

PrefixDirectory PrefixDirectory::build(std::span<const Row> rows, std::span<const PrefixId> local_prefixes,
                                       const std::vector<std::pair<PrefixId, PrefixId>>& anon_to_real,
                                       std::vector<std::string>* warnings) {
  auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };
  PrefixDirectory d;
  for (const auto& [anon, real] : anon_to_real) {
    bool fresh_a = d.anon_to_real_.emplace(anon.key(), real.key()).second;
    bool fresh_r = d.real_to_anon_.emplace(real.key(), anon.key()).second;
    if (!fresh_a || !fresh_r) {
      warn("anon map is not a bijection at " + anon.to_string() + " <-> " + real.to_string() + "; keeping first");
    }
  }
  auto to_flow_space = [&](std::uint32_t real_key) {
    auto it = d.real_to_anon_.find(real_key);
    return it == d.real_to_anon_.end() ? real_key : it->second;
  };

  std::map<std::string, std::uint32_t> org_ids;
  // Longest match first; stable so equal lengths keep file order.
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::min(rows[a].prefix.length, 24) > std::min(rows[b].prefix.length, 24);
  });
  std::unordered_map<std::uint32_t, int> claimed_len;
  for (std::size_t i : order) {
    const Row& r = rows[i];
    auto [it, fresh] = org_ids.emplace(r.org_id, static_cast<std::uint32_t>(d.orgs_.size()));
    if (fresh) {
      d.orgs_.push_back({r.org_id, r.org_name.empty() ? r.org_id : r.org_name, r.category, false});
    }
    const std::uint32_t org = it->second;
    const int len = std::min(r.prefix.length, 24);
    const std::uint32_t first = r.prefix.network >> 8;
    const std::uint32_t count = 1u << (24 - len);
    for (std::uint32_t k = first; k < first + count; ++k) {
      const std::uint32_t key = to_flow_space(k);
      auto [pos, inserted] = d.prefix_to_org_.emplace(key, org);
      if (inserted) {
        claimed_len[key] = len;
      } else if (claimed_len[key] == len && pos->second != org) {
        warn("prefix " + PrefixId::from_key(k).to_string() + " claimed by both " + d.orgs_[pos->second].id +
             " and " + r.org_id + "; keeping " + d.orgs_[pos->second].id);
      }
    }
  }
  for (PrefixId p : local_prefixes) {
    const std::uint32_t key = to_flow_space(p.key());
    d.local_.insert(key);
    auto it = d.prefix_to_org_.find(key);
    if (it != d.prefix_to_org_.end()) d.orgs_[it->second].local = true;
  }
  return d;
}

std::size_t PrefixDirectory::org_index(PrefixId p) const {
  auto it = prefix_to_org_.find(p.key());
  return it == prefix_to_org_.end() ? 0 : it->second;
}

const Organization& PrefixDirectory::lookup(PrefixId p) const { return orgs_[org_index(p)]; }

std::vector<PrefixId> PrefixDirectory::local_prefixes() const {
  std::vector<PrefixId> out;
  out.reserve(local_.size());
  for (auto k : local_) out.push_back(PrefixId::from_key(k));
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::size_t> PrefixDirectory::find_org(std::string_view id) const {
  for (std::size_t i = 1; i < orgs_.size(); ++i) {
    if (orgs_[i].id == id) return i;
  }
  return std::nullopt;
}

std::optional<PrefixId> PrefixDirectory::real_of(PrefixId anon) const {
  auto it = anon_to_real_.find(anon.key());
  if (it == anon_to_real_.end()) return std::nullopt;
  return PrefixId::from_key(it->second);
}

std::optional<PrefixId> PrefixDirectory::anon_of(PrefixId real) const {
  auto it = real_to_anon_.find(real.key());
  if (it == real_to_anon_.end()) return std::nullopt;
  return PrefixId::from_key(it->second);
}

std::vector<PrefixDirectory::Row> read_org_rows(std::istream& in, std::vector<std::string>& warnings) {
  std::vector<PrefixDirectory::Row> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::skippable(line)) continue;
    auto f = csv::split(line);
    if (lineno == 1 && !f.empty() && csv::trim(f[0]).starts_with("prefix")) continue;
    try {
      PrefixDirectory::Row r;
      if (f.size() == 3) {
        r.org_id = std::string(csv::trim(f[1]));
        r.org_name = r.org_id;
        r.category = parse_category(f[2]);
      } else if (f.size() == 4) {
        r.org_id = std::string(csv::trim(f[1]));
        r.org_name = std::string(csv::trim(f[2]));
        r.category = parse_category(f[3]);
      } else {
        throw input_error("expected 3 or 4 fields");
      }
      r.prefix = Cidr::parse(csv::trim(f[0]));
      if (r.prefix.length < 8) throw input_error("prefix shorter than /8");
      if (r.org_id.empty()) throw input_error("empty org id");
      rows.push_back(std::move(r));
    } catch (const Error& e) {
      warnings.push_back("org_db line " + std::to_string(lineno) + " skipped: " + e.what());
    }
  }
  return rows;
}

void apply_gov_suffix_rule(std::vector<PrefixDirectory::Row>& rows) {
  for (auto& r : rows) {
    auto name = lower(csv::trim(r.org_name));
    if (name.ends_with(".gov")) r.category = OrgCategory::government;
  }
}

DirectoryLoad load_directory(std::istream& org_db, std::istream& local_in, std::istream* anon_in) {
  DirectoryLoad out;
  auto rows = read_org_rows(org_db, out.warnings);

  std::vector<PrefixId> locals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(local_in, line)) {
    ++lineno;
    if (csv::skippable(line)) continue;
    try {
      locals.push_back(PrefixId::parse(csv::trim(line)));
    } catch (const Error& e) {
      out.warnings.push_back("local prefixes line " + std::to_string(lineno) + " skipped: " + e.what());
    }
  }

  std::vector<std::pair<PrefixId, PrefixId>> anon;
  if (anon_in) {
    lineno = 0;
    while (std::getline(*anon_in, line)) {
      ++lineno;
      if (csv::skippable(line)) continue;
      auto f = csv::split(line);
      if (lineno == 1 && !f.empty() && csv::trim(f[0]).starts_with("anon")) continue;
      try {
        if (f.size() != 2) throw input_error("expected 2 fields");
        anon.emplace_back(PrefixId::parse(csv::trim(f[0])), PrefixId::parse(csv::trim(f[1])));
      } catch (const Error& e) {
        out.warnings.push_back("anon map line " + std::to_string(lineno) + " skipped: " + e.what());
      }
    }
  }
  out.directory = PrefixDirectory::build(rows, locals, anon, &out.warnings);
  return out;
}

DirectoryLoad load_directory(const std::filesystem::path& org_db, const std::filesystem::path& local_prefixes,
                             const std::optional<std::filesystem::path>& anon_map) {
  auto db = open_or_throw(org_db);
  auto local = open_or_throw(local_prefixes);
  if (anon_map) {
    auto anon = open_or_throw(*anon_map);
    return load_directory(db, local, &anon);
  }
  return load_directory(db, local, nullptr);
}

std::string_view to_string(ServerSide s) {
  switch (s) {
    case ServerSide::src: return "src";
    case ServerSide::dst: return "dst";
    case ServerSide::ambiguous: break;
  }
  return "ambiguous";
}

std::string_view to_string(Orientation o) {
  switch (o) {
    case Orientation::inbound: return "inbound";
    case Orientation::outbound: return "outbound";
    case Orientation::local_local: return "local-local";
    case Orientation::transit: break;
  }
  return "transit";
}

DirectedFlow infer_direction(const UpsampledFlow& flow, const PrefixDirectory& dir, const ServicePorts& svc) {
  DirectedFlow d;
  static_cast<UpsampledFlow&>(d) = flow;
  const bool src_svc = svc.contains(flow.src_port);
  const bool dst_svc = svc.contains(flow.dst_port);
  if (src_svc != dst_svc) {
    d.server_side = src_svc ? ServerSide::src : ServerSide::dst;
    d.src_is_server_like = src_svc;
  } else {
    d.server_side = ServerSide::ambiguous;
    // Orientation still needs a side; pick the lower (port, ip) so the
    // choice does not depend on field order.
    d.src_is_server_like = std::pair(flow.src_port, flow.src_ip) < std::pair(flow.dst_port, flow.dst_ip);
  }
  const bool server_local = dir.is_local(d.server_ip());
  const bool client_local = dir.is_local(d.client_ip());
  if (server_local && client_local) {
    d.orientation = Orientation::local_local;
  } else if (server_local) {
    d.orientation = Orientation::inbound;
  } else if (client_local) {
    d.orientation = Orientation::outbound;
  } else {
    d.orientation = Orientation::transit;
  }
  return d;
}

std::vector<DirectedFlow> infer_directions(std::span<const UpsampledFlow> flows, const PrefixDirectory& dir,
                                           const ServicePorts& svc) {
  std::vector<DirectedFlow> out;
  out.reserve(flows.size());
  for (const auto& f : flows) out.push_back(infer_direction(f, dir, svc));
  return out;
}

std::string_view to_string(IpRole r) { return r == IpRole::server ? "server" : "client"; }

IpRoleResult classify_ip_role(Ipv4 ip, std::span<const DirectedFlow> flows, const ServicePorts& svc,
                              double threshold) {
  std::uint64_t sourced = 0, served = 0;
  bool seen = false;
  for (const auto& f : flows) {
    if (f.src_ip == ip) {
      seen = true;
      sourced += f.bytes;
      if (svc.contains(f.src_port) && f.dst_port > 1023) served += f.bytes;
    } else if (f.dst_ip == ip) {
      seen = true;
    }
  }
  if (!seen) throw insufficient_data("insufficient activity for " + format_ipv4(ip));
  IpRoleResult r;
  r.server_fraction = sourced == 0 ? 0.0 : static_cast<double>(served) / static_cast<double>(sourced);
  r.role = r.server_fraction > threshold ? IpRole::server : IpRole::client;
  return r;
}

}  // namespace flowshift
