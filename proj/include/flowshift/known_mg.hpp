#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string_view>

#include "flowshift/labels.hpp"
#include "flowshift/net.hpp"

namespace flowshift {

enum class Provenance { ground_truth, verified };
std::string_view to_string(Provenance p);

struct MgEntry {
  AppLabel app = AppLabel::zoom;
  Provenance provenance = Provenance::ground_truth;
  double vote_fraction = 1.0;

  bool operator==(const MgEntry&) const = default;
};

// Server prefixes of the online meeting / gaming applications: ground truth
// plus classifier-labeled prefixes whose ownership checked out.
class KnownMgPrefixes {
 public:
  // Returns false when the prefix already has an entry.
  bool add_ground_truth(PrefixId p, AppLabel app);
  // Never overwrites a ground-truth entry; returns whether it was inserted.
  bool add_verified(PrefixId p, AppLabel app, double vote_fraction);

  std::optional<MgEntry> find(PrefixId p) const;
  std::optional<AppLabel> app_of(PrefixId p) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t count(AppLabel app, Provenance prov) const;
  const std::map<PrefixId, MgEntry>& entries() const { return entries_; }

  // CSV: prefix,app,provenance,vote_fraction
  void write_csv(std::ostream& out) const;
  static KnownMgPrefixes read_csv(std::istream& in);

  bool operator==(const KnownMgPrefixes&) const = default;

 private:
  std::map<PrefixId, MgEntry> entries_;
};

}  // namespace flowshift
