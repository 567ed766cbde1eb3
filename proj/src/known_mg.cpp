#include "flowshift/known_mg.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "flowshift/csv.hpp"
#include "flowshift/error.hpp"

namespace flowshift {

std::string_view to_string(Provenance p) { return p == Provenance::ground_truth ? "ground-truth" : "verified"; }

bool KnownMgPrefixes::add_ground_truth(PrefixId p, AppLabel app) {
  return entries_.emplace(p, MgEntry{app, Provenance::ground_truth, 1.0}).second;
}

bool KnownMgPrefixes::add_verified(PrefixId p, AppLabel app, double vote_fraction) {
  return entries_.emplace(p, MgEntry{app, Provenance::verified, vote_fraction}).second;
}

std::optional<MgEntry> KnownMgPrefixes::find(PrefixId p) const {
  auto it = entries_.find(p);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<AppLabel> KnownMgPrefixes::app_of(PrefixId p) const {
  auto it = entries_.find(p);
  if (it == entries_.end()) return std::nullopt;
  return it->second.app;
}

std::size_t KnownMgPrefixes::count(AppLabel app, Provenance prov) const {
  std::size_t n = 0;
  for (const auto& [p, e] : entries_) n += (e.app == app && e.provenance == prov);
  return n;
}

void KnownMgPrefixes::write_csv(std::ostream& out) const {
  out << "prefix,app,provenance,vote_fraction\n";
  char buf[32];
  for (const auto& [p, e] : entries_) {
    std::snprintf(buf, sizeof buf, "%.6f", e.vote_fraction);
    out << p.to_string() << ',' << to_string(e.app) << ',' << to_string(e.provenance) << ',' << buf << '\n';
  }
}

KnownMgPrefixes KnownMgPrefixes::read_csv(std::istream& in) {
  KnownMgPrefixes k;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::skippable(line) || (lineno == 1 && line.starts_with("prefix"))) continue;
    auto f = csv::split(line);
    if (f.size() != 4) throw input_error("known-mg-prefixes line " + std::to_string(lineno) + ": expected 4 fields");
    auto app = parse_label(csv::trim(f[1]));
    if (!app || !is_mg(*app)) throw input_error("known-mg-prefixes line " + std::to_string(lineno) + ": bad app");
    auto prefix = PrefixId::parse(csv::trim(f[0]));
    auto prov = csv::trim(f[2]);
    double vote = std::stod(f[3]);
    if (prov == "ground-truth") {
      k.add_ground_truth(prefix, *app);
    } else if (prov == "verified") {
      k.add_verified(prefix, *app, vote);
    } else {
      throw input_error("known-mg-prefixes line " + std::to_string(lineno) + ": bad provenance");
    }
  }
  return k;
}

}  // namespace flowshift
