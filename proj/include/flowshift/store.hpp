#pragma once

// Labeled-volume store: up-sampled volume aggregated per 5-minute bin,
// traffic class, application label and the organizations on either side.
// Persisted as one CSV per UTC day so golden comparisons diff cleanly.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowshift/classify.hpp"
#include "flowshift/flow.hpp"
#include "flowshift/org.hpp"

namespace flowshift {

struct StoreOrg {
  std::string id;
  std::string name;
  OrgCategory category = OrgCategory::unknown;
  bool local = false;

  bool operator==(const StoreOrg&) const = default;
};

struct StoreKey {
  std::int64_t bin = 0;  // 5-minute bin index
  CoarseClass coarse = CoarseClass::candidate;
  std::int16_t label = -1;  // AppLabel index, -1 when unlabeled
  std::uint32_t server_org = 0;
  std::uint32_t client_org = 0;
  Orientation orientation = Orientation::transit;
  bool direction_known = false;

  auto operator<=>(const StoreKey&) const = default;
};

// What a volume series is about.
struct Selector {
  enum class Kind { total, coarse, label, unlabeled_candidate } kind = Kind::total;
  CoarseClass coarse = CoarseClass::candidate;
  AppLabel label = AppLabel::https;

  static Selector total() { return {}; }
  static Selector of(CoarseClass c) { return {Kind::coarse, c, AppLabel::https}; }
  static Selector of(AppLabel l) { return {Kind::label, CoarseClass::candidate, l}; }
  static Selector unlabeled() { return {Kind::unlabeled_candidate, CoarseClass::candidate, AppLabel::https}; }

  bool matches(const StoreKey& k) const;
  std::string name() const;
};

class LabeledVolumeStore {
 public:
  LabeledVolumeStore();

  // Organization table mirrors the directory; index 0 is the unknown org.
  static LabeledVolumeStore for_directory(const PrefixDirectory& dir);

  void add(const DirectedFlow& flow, const FlowClass& cls, const PrefixDirectory& dir);

  const std::vector<StoreOrg>& orgs() const { return orgs_; }
  const std::map<StoreKey, BinVolume>& cells() const { return cells_; }

  // Bytes per 5-minute bin for the selector.
  std::map<std::int64_t, double> series(const Selector& sel) const;
  BinVolume total(const Selector& sel) const;

  // Writes <dir>/orgs.csv and <dir>/<YYYY-MM-DD>.csv files (UTC days).
  void write(const std::filesystem::path& dir) const;
  static LabeledVolumeStore read(const std::filesystem::path& dir);

  bool operator==(const LabeledVolumeStore&) const = default;

 private:
  std::vector<StoreOrg> orgs_;
  std::map<StoreKey, BinVolume> cells_;
};

// Directs, classifies and aggregates a batch of up-sampled flows.
LabeledVolumeStore build_store(std::span<const UpsampledFlow> flows, const PrefixDirectory& dir,
                               const PortMap& ports, const ServicePorts& svc, const KnownMgPrefixes* mg);

// Writes `content` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace flowshift
