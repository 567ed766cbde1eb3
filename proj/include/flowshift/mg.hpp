#pragma once

// Application-server discovery for online meeting and gaming traffic:
// per prefix-hour port vectors, a CART decision tree trained on
// ground-truth server prefixes, candidate discovery from ground-truth
// ports, majority-vote labeling and ownership pruning.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "flowshift/known_mg.hpp"
#include "flowshift/labels.hpp"
#include "flowshift/org.hpp"

namespace flowshift::mg {

struct GroundTruthPrefixes {
  std::vector<std::pair<PrefixId, AppLabel>> prefixes;  // file order, /24 granularity
  std::vector<std::string> warnings;
};

// Expands `app,cidr` rows to /24s: shorter blocks yield every contained /24,
// longer ones their covering /24. A /24 claimed by two apps keeps the first.
GroundTruthPrefixes expand_ground_truth(std::istream& in);
GroundTruthPrefixes expand_ground_truth(std::span<const std::pair<AppLabel, Cidr>> rows);

struct PortRange {
  std::uint8_t proto = 0;
  std::uint16_t lo = 0;
  std::uint16_t hi = 0;
};

// Ports each application's provider says it needs (`app,proto,port[-port]`).
class GroundTruthPorts {
 public:
  static GroundTruthPorts read(std::istream& in);
  void add(AppLabel app, PortRange range);
  bool matches_any(std::uint8_t proto, std::uint16_t port) const;
  const std::map<AppLabel, std::vector<PortRange>>& ranges() const { return ranges_; }

 private:
  std::map<AppLabel, std::vector<PortRange>> ranges_;
};

inline constexpr std::size_t kDefaultWidth = 16;
inline constexpr std::uint64_t kMinVectorFlows = 50;

// Activity fingerprint of one prefix over one hour.
struct PortVector {
  PrefixId prefix;
  std::int64_t hour = 0;             // hour index since the epoch
  std::vector<std::uint16_t> ports;  // ascending, zero padded in front
  std::uint64_t flow_count = 0;
  std::optional<AppLabel> label;

  // Tree features: the padded ports followed by the flow count.
  std::vector<double> features() const;
};

// For every (prefix, hour) with at least `min_flows` flows touching a
// prefix in `prefixes`, keeps the `width` most frequent ports used on the
// prefix side (ties go to the lower port). Output is sorted by (prefix, hour).
std::vector<PortVector> extract_vectors(std::span<const DirectedFlow> flows,
                                        const std::unordered_set<PrefixId>& prefixes,
                                        std::size_t width = kDefaultWidth,
                                        std::uint64_t min_flows = kMinVectorFlows);

struct TreeParams {
  int max_depth = 12;
  std::size_t min_leaf = 5;
};

struct Prediction {
  AppLabel label = AppLabel::zoom;
  double confidence = 0.0;  // majority share in the leaf
};

// CART classifier with Gini impurity over numeric features.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::array<std::uint32_t, kAppLabelCount> counts{};
  };

  static DecisionTree fit(std::span<const std::vector<double>> x, std::span<const AppLabel> y,
                          const TreeParams& params, std::uint64_t seed);

  Prediction predict(std::span<const double> features) const;
  Prediction predict(const PortVector& v) const { return predict(v.features()); }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const;
  int depth() const;
  std::uint64_t seed() const { return seed_; }
  const TreeParams& params() const { return params_; }

  void serialize(std::ostream& out) const;
  static DecisionTree deserialize(std::istream& in);

 private:
  std::vector<Node> nodes_;
  TreeParams params_;
  std::uint64_t seed_ = 0;
  std::size_t feature_count_ = 0;
};

struct LabelScore {
  AppLabel label;
  std::size_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
};

struct TrainReport {
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  double test_accuracy = 0.0;
  std::vector<LabelScore> per_label;
};

struct TrainResult {
  DecisionTree tree;
  TrainReport report;
};

// Shuffles with `seed`, trains on round(split * n) vectors and scores the
// rest. Throws Error(insufficient_data) when the vectors carry fewer than
// two labels.
TrainResult train(std::span<const PortVector> vectors, double split, std::uint64_t seed,
                  const TreeParams& params = {});

struct PrefixLabel {
  AppLabel label = AppLabel::zoom;
  double vote_fraction = 0.0;
  std::size_t votes = 0;
};

// Majority vote over a prefix's vectors; ties go to the higher mean leaf
// confidence, then the lexicographically first label name.
PrefixLabel label_prefix(const DecisionTree& tree, std::span<const PortVector> vectors);

// Prefixes outside the ground truth with a flow that uses one of the
// ground-truth ports while the peer port is dynamic (> 1023).
std::set<PrefixId> find_candidates(std::span<const DirectedFlow> flows, const GroundTruthPorts& gt_ports,
                                   const std::unordered_set<PrefixId>& ground_truth);

// Owner and partner organizations per application.
class BusinessRelations {
 public:
  static BusinessRelations defaults();
  // `app,partner` rows; replaces the defaults for the listed apps.
  static BusinessRelations read(std::istream& in);

  void add(AppLabel app, std::string partner) { partners_[app].push_back(std::move(partner)); }
  const std::vector<std::string>& partners(AppLabel app) const;
  // Case-insensitive substring match of any partner name in `org_name`.
  bool consistent(AppLabel app, std::string_view org_name) const;

 private:
  std::map<AppLabel, std::vector<std::string>> partners_;
};

struct PruneResult {
  std::vector<std::pair<PrefixId, PrefixLabel>> kept;
  std::vector<std::pair<PrefixId, PrefixLabel>> pruned;
};

PruneResult prune_by_ownership(const std::map<PrefixId, PrefixLabel>& labeled, const PrefixDirectory& dir,
                               const BusinessRelations& rel);

struct PipelineConfig {
  std::size_t width = kDefaultWidth;
  std::uint64_t min_flows = kMinVectorFlows;
  double split = 0.5;
  std::uint64_t seed = 1;
  TreeParams tree;
};

struct PipelineResult {
  DecisionTree tree;
  TrainReport report;
  KnownMgPrefixes known;
  std::map<PrefixId, PrefixLabel> ground_truth_votes;  // majority vote on every gt prefix with vectors
  std::map<PrefixId, PrefixLabel> candidate_votes;
  std::size_t ground_truth_prefixes = 0;
  std::size_t ground_truth_with_vectors = 0;
  std::size_t candidate_prefixes = 0;
  std::size_t strong_candidates = 0;
  std::size_t verified = 0;
};

// The full seven-step pipeline.
PipelineResult run_pipeline(std::span<const DirectedFlow> flows, const GroundTruthPrefixes& gt,
                            const GroundTruthPorts& gt_ports, const PrefixDirectory& dir,
                            const BusinessRelations& rel, const PipelineConfig& config = {});

}  // namespace flowshift::mg
