#include "flowshift/mg.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "flowshift/csv.hpp"
#include "flowshift/error.hpp"

namespace flowshift::mg {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

AppLabel parse_mg_label(std::string_view text, const std::string& where) {
  auto l = parse_label(lower(csv::trim(text)));
  if (!l || !is_mg(*l)) throw input_error(where + ": unknown application '" + std::string(text) + "'");
  return *l;
}

// Label with the most votes; ties to the lexicographically first name.
AppLabel majority(const std::array<std::uint32_t, kAppLabelCount>& counts) {
  std::size_t best = kAppLabelCount;
  for (std::size_t i = 0; i < kAppLabelCount; ++i) {
    if (counts[i] == 0) continue;
    if (best == kAppLabelCount || counts[i] > counts[best] ||
        (counts[i] == counts[best] && to_string(kAppLabels[i]) < to_string(kAppLabels[best]))) {
      best = i;
    }
  }
  return kAppLabels[best == kAppLabelCount ? 0 : best];
}

bool is_transport(std::uint8_t p) { return p == proto::tcp || p == proto::udp; }

}  // namespace

GroundTruthPrefixes expand_ground_truth(std::span<const std::pair<AppLabel, Cidr>> rows) {
  GroundTruthPrefixes out;
  std::unordered_map<PrefixId, AppLabel> seen;
  for (const auto& [app, cidr] : rows) {
    if (cidr.length < 8 || cidr.length > 32) {
      out.warnings.push_back("ground truth " + cidr.to_string() + " has length outside 8-32; skipped");
      continue;
    }
    const int len = std::min(cidr.length, 24);
    const std::uint32_t first = cidr.network >> 8;
    const std::uint32_t count = 1u << (24 - len);
    for (std::uint32_t k = first; k < first + count; ++k) {
      PrefixId p = PrefixId::from_key(k);
      auto [it, fresh] = seen.emplace(p, app);
      if (fresh) {
        out.prefixes.emplace_back(p, app);
      } else if (it->second != app) {
        out.warnings.push_back("conflict: " + p.to_string() + " claimed by " + std::string(to_string(it->second)) +
                               " and " + std::string(to_string(app)) + "; keeping " +
                               std::string(to_string(it->second)));
      }
    }
  }
  return out;
}

GroundTruthPrefixes expand_ground_truth(std::istream& in) {
  std::vector<std::pair<AppLabel, Cidr>> rows;
  std::vector<std::string> warnings;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::skippable(line)) continue;
    auto f = csv::split(line);
    if (lineno == 1 && !f.empty() && csv::trim(f[0]) == "app") continue;
    try {
      if (f.size() != 2) throw input_error("expected app,cidr");
      auto where = "ground-truth prefixes line " + std::to_string(lineno);
      rows.emplace_back(parse_mg_label(f[0], where), Cidr::parse(csv::trim(f[1])));
    } catch (const Error& e) {
      warnings.push_back("ground-truth prefixes line " + std::to_string(lineno) + " skipped: " + e.what());
    }
  }
  auto out = expand_ground_truth(rows);
  out.warnings.insert(out.warnings.begin(), warnings.begin(), warnings.end());
  return out;
}

GroundTruthPorts GroundTruthPorts::read(std::istream& in) {
  GroundTruthPorts g;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::skippable(line)) continue;
    auto f = csv::split(line);
    if (lineno == 1 && !f.empty() && csv::trim(f[0]) == "app") continue;
    auto where = "ground-truth ports line " + std::to_string(lineno);
    if (f.size() != 3) throw input_error(where + ": expected app,proto,port[-port]");
    AppLabel app = parse_mg_label(f[0], where);
    auto proto_text = lower(csv::trim(f[1]));
    PortRange r;
    if (proto_text == "tcp" || proto_text == "6") {
      r.proto = proto::tcp;
    } else if (proto_text == "udp" || proto_text == "17") {
      r.proto = proto::udp;
    } else {
      throw input_error(where + ": proto must be tcp or udp");
    }
    auto ports = csv::trim(f[2]);
    auto dash = ports.find('-');
    auto parse_port = [&](std::string_view t) {
      unsigned v = 0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size() || v > 65535) throw input_error(where + ": bad port");
      return static_cast<std::uint16_t>(v);
    };
    r.lo = parse_port(ports.substr(0, dash));
    r.hi = dash == std::string_view::npos ? r.lo : parse_port(ports.substr(dash + 1));
    if (r.hi < r.lo) throw input_error(where + ": empty port range");
    g.add(app, r);
  }
  return g;
}

void GroundTruthPorts::add(AppLabel app, PortRange range) { ranges_[app].push_back(range); }

bool GroundTruthPorts::matches_any(std::uint8_t p, std::uint16_t port) const {
  for (const auto& [app, ranges] : ranges_) {
    for (const auto& r : ranges) {
      if (r.proto == p && port >= r.lo && port <= r.hi) return true;
    }
  }
  return false;
}

std::vector<double> PortVector::features() const {
  std::vector<double> f(ports.begin(), ports.end());
  f.push_back(static_cast<double>(flow_count));
  return f;
}

std::vector<PortVector> extract_vectors(std::span<const DirectedFlow> flows,
                                        const std::unordered_set<PrefixId>& prefixes, std::size_t width,
                                        std::uint64_t min_flows) {
  if (width < 1) throw input_error("vector width must be at least 1");
  struct Cell {
    std::unordered_map<std::uint16_t, std::uint64_t> ports;
    std::uint64_t flows = 0;
  };
  std::map<std::pair<PrefixId, std::int64_t>, Cell> cells;
  for (const auto& f : flows) {
    if (!is_transport(f.proto)) continue;
    const std::int64_t hour = floor_div(f.ts_start, kHour);
    const PrefixId sp = PrefixId::of(f.src_ip);
    const PrefixId dp = PrefixId::of(f.dst_ip);
    const bool src_in = prefixes.contains(sp);
    const bool dst_in = prefixes.contains(dp);
    if (src_in) {
      auto& c = cells[{sp, hour}];
      c.ports[f.src_port] += 1;
      c.flows += 1;
    }
    if (dst_in) {
      auto& c = cells[{dp, hour}];
      c.ports[f.dst_port] += 1;
      if (!(src_in && sp == dp)) c.flows += 1;
    }
  }
  std::vector<PortVector> out;
  for (auto& [key, cell] : cells) {
    if (cell.flows < min_flows) continue;
    std::vector<std::pair<std::uint16_t, std::uint64_t>> ranked(cell.ports.begin(), cell.ports.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() > width) ranked.resize(width);
    PortVector v;
    v.prefix = key.first;
    v.hour = key.second;
    v.flow_count = cell.flows;
    v.ports.assign(width - ranked.size(), 0);
    std::vector<std::uint16_t> kept;
    for (const auto& [port, n] : ranked) kept.push_back(port);
    std::sort(kept.begin(), kept.end());
    v.ports.insert(v.ports.end(), kept.begin(), kept.end());
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Decision tree

namespace {

struct Builder {
  std::span<const std::vector<double>> x;
  std::span<const AppLabel> y;
  TreeParams params;
  std::vector<DecisionTree::Node>* nodes;

  int build(std::vector<std::size_t>& idx, int depth) {
    DecisionTree::Node node;
    for (auto i : idx) node.counts[index_of(y[i])] += 1;
    const int id = static_cast<int>(nodes->size());
    nodes->push_back(node);

    const std::size_t n = idx.size();
    std::size_t nonzero = 0;
    double parent_sq = 0.0;
    for (auto c : node.counts) {
      nonzero += (c != 0);
      parent_sq += double(c) * double(c);
    }
    if (depth >= params.max_depth || nonzero <= 1 || n < 2 * params.min_leaf) return id;

    // Weighted Gini impurity n_l*g_l + n_r*g_r = n - (sq_l/n_l + sq_r/n_r),
    // so the best split maximises sq_l/n_l + sq_r/n_r.
    const double parent_score = parent_sq / double(n);
    double best_score = parent_score + 1e-9;
    int best_feature = -1;
    double best_threshold = 0.0;
    const std::size_t features = x[idx[0]].size();
    std::vector<std::size_t> order(idx);
    for (std::size_t f = 0; f < features; ++f) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
      std::array<std::uint32_t, kAppLabelCount> left{};
      auto right = node.counts;
      double sq_l = 0.0, sq_r = parent_sq;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto c = index_of(y[order[i]]);
        sq_l += 2.0 * left[c] + 1.0;
        left[c] += 1;
        sq_r -= 2.0 * right[c] - 1.0;
        right[c] -= 1;
        const std::size_t nl = i + 1, nr = n - nl;
        const double a = x[order[i]][f], b = x[order[i + 1]][f];
        if (a == b || nl < params.min_leaf || nr < params.min_leaf) continue;
        const double score = sq_l / double(nl) + sq_r / double(nr);
        if (score > best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = a + (b - a) / 2.0;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> l, r;
    for (auto i : idx) (x[i][best_feature] <= best_threshold ? l : r).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    const int left_id = build(l, depth + 1);
    const int right_id = build(r, depth + 1);
    auto& self = (*nodes)[id];
    self.feature = best_feature;
    self.threshold = best_threshold;
    self.left = left_id;
    self.right = right_id;
    return id;
  }
};

}  // namespace

DecisionTree DecisionTree::fit(std::span<const std::vector<double>> x, std::span<const AppLabel> y,
                               const TreeParams& params, std::uint64_t seed) {
  if (x.size() != y.size() || x.empty()) throw input_error("training data is empty or misaligned");
  DecisionTree t;
  t.params_ = params;
  t.seed_ = seed;
  t.feature_count_ = x[0].size();
  for (const auto& row : x) {
    if (row.size() != t.feature_count_) throw input_error("ragged feature rows");
  }
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  Builder b{x, y, params, &t.nodes_};
  b.build(idx, 0);
  return t;
}

Prediction DecisionTree::predict(std::span<const double> features) const {
  if (features.size() != feature_count_) throw input_error("feature count mismatch");
  int id = 0;
  while (nodes_[id].feature >= 0) {
    const auto& n = nodes_[id];
    id = features[n.feature] <= n.threshold ? n.left : n.right;
  }
  const auto& leaf = nodes_[id];
  Prediction p;
  p.label = majority(leaf.counts);
  std::uint64_t total = 0;
  for (auto c : leaf.counts) total += c;
  p.confidence = total == 0 ? 0.0 : double(leaf.counts[index_of(p.label)]) / double(total);
  return p;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return best;
}

void DecisionTree::serialize(std::ostream& out) const {
  out << "cart-gini v1\n";
  out << "seed " << seed_ << " max_depth " << params_.max_depth << " min_leaf " << params_.min_leaf << " features "
      << feature_count_ << " nodes " << nodes_.size() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    std::snprintf(buf, sizeof buf, "%.17g", n.threshold);
    out << i << ' ' << n.feature << ' ' << buf << ' ' << n.left << ' ' << n.right;
    for (auto c : n.counts) out << ' ' << c;
    out << '\n';
  }
}

DecisionTree DecisionTree::deserialize(std::istream& in) {
  DecisionTree t;
  std::string magic, version, key;
  std::size_t count = 0;
  if (!(in >> magic >> version) || magic != "cart-gini" || version != "v1") throw input_error("not a tree model");
  in >> key >> t.seed_ >> key >> t.params_.max_depth >> key >> t.params_.min_leaf >> key >> t.feature_count_ >> key >>
      count;
  if (!in) throw input_error("truncated tree header");
  t.nodes_.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t id = 0;
    auto& n = t.nodes_[i];
    in >> id >> n.feature >> n.threshold >> n.left >> n.right;
    for (auto& c : n.counts) in >> c;
    if (!in || id != i) throw input_error("corrupt tree node " + std::to_string(i));
    if (n.feature >= 0 && (n.left <= int(i) || n.right <= int(i) || n.left >= int(count) || n.right >= int(count))) {
      throw input_error("corrupt tree links at node " + std::to_string(i));
    }
  }
  if (count == 0) throw input_error("empty tree");
  return t;
}

TrainResult train(std::span<const PortVector> vectors, double split, std::uint64_t seed, const TreeParams& params) {
  if (!(split > 0.0 && split < 1.0)) throw input_error("split must lie in (0, 1)");
  std::set<AppLabel> labels;
  for (const auto& v : vectors) {
    if (!v.label) throw input_error("unlabeled training vector");
    labels.insert(*v.label);
  }
  if (labels.size() < 2) throw insufficient_data("training vectors cover fewer than two applications");

  const std::size_t n = vectors.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
  auto n_train = static_cast<std::size_t>(std::llround(split * double(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  std::vector<std::vector<double>> x;
  std::vector<AppLabel> y;
  for (std::size_t i = 0; i < n_train; ++i) {
    x.push_back(vectors[order[i]].features());
    y.push_back(*vectors[order[i]].label);
  }
  TrainResult r{DecisionTree::fit(x, y, params, seed), {}};
  r.report.train_size = n_train;
  r.report.test_size = n - n_train;

  std::map<AppLabel, std::array<std::size_t, 3>> tally;  // tp, predicted, actual
  std::size_t correct = 0;
  for (std::size_t i = n_train; i < n; ++i) {
    const auto& v = vectors[order[i]];
    auto pred = r.tree.predict(v).label;
    tally[pred][1] += 1;
    tally[*v.label][2] += 1;
    if (pred == *v.label) {
      ++correct;
      tally[pred][0] += 1;
    }
  }
  r.report.test_accuracy = double(correct) / double(n - n_train);
  for (const auto& [label, t] : tally) {
    r.report.per_label.push_back({label, t[2], t[1] ? double(t[0]) / double(t[1]) : 0.0,
                                  t[2] ? double(t[0]) / double(t[2]) : 0.0});
  }
  return r;
}

PrefixLabel label_prefix(const DecisionTree& tree, std::span<const PortVector> vectors) {
  if (vectors.empty()) throw insufficient_data("insufficient activity");
  std::array<std::uint32_t, kAppLabelCount> votes{};
  std::array<double, kAppLabelCount> confidence{};
  for (const auto& v : vectors) {
    auto p = tree.predict(v);
    votes[index_of(p.label)] += 1;
    confidence[index_of(p.label)] += p.confidence;
  }
  std::size_t best = kAppLabelCount;
  for (std::size_t i = 0; i < kAppLabelCount; ++i) {
    if (votes[i] == 0) continue;
    if (best == kAppLabelCount) {
      best = i;
      continue;
    }
    if (votes[i] != votes[best]) {
      if (votes[i] > votes[best]) best = i;
      continue;
    }
    const double mi = confidence[i] / votes[i], mb = confidence[best] / votes[best];
    if (mi > mb || (mi == mb && to_string(kAppLabels[i]) < to_string(kAppLabels[best]))) best = i;
  }
  return {kAppLabels[best], double(votes[best]) / double(vectors.size()), vectors.size()};
}

std::set<PrefixId> find_candidates(std::span<const DirectedFlow> flows, const GroundTruthPorts& gt_ports,
                                   const std::unordered_set<PrefixId>& ground_truth) {
  std::set<PrefixId> out;
  for (const auto& f : flows) {
    if (!is_transport(f.proto)) continue;
    if (f.dst_port > 1023 && gt_ports.matches_any(f.proto, f.src_port)) {
      auto p = PrefixId::of(f.src_ip);
      if (!ground_truth.contains(p)) out.insert(p);
    }
    if (f.src_port > 1023 && gt_ports.matches_any(f.proto, f.dst_port)) {
      auto p = PrefixId::of(f.dst_ip);
      if (!ground_truth.contains(p)) out.insert(p);
    }
  }
  return out;
}

BusinessRelations BusinessRelations::defaults() {
  BusinessRelations r;
  for (auto p : {"AT&T", "CenturyLink", "Level3", "Microsoft"}) r.add(AppLabel::bluejeans, p);
  for (auto p : {"Amazon", "Cisco", "Zoom"}) r.add(AppLabel::zoom, p);
  for (auto p : {"Cisco", "AT&T", "CenturyLink", "Amazon"}) r.add(AppLabel::webex, p);
  r.add(AppLabel::gmeet, "Google");
  r.add(AppLabel::go_to, "Logmein");
  r.add(AppLabel::skype, "Microsoft");
  return r;
}

BusinessRelations BusinessRelations::read(std::istream& in) {
  BusinessRelations fresh;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::skippable(line)) continue;
    auto f = csv::split(line);
    if (lineno == 1 && !f.empty() && csv::trim(f[0]) == "app") continue;
    auto where = "relations line " + std::to_string(lineno);
    if (f.size() != 2) throw input_error(where + ": expected app,partner");
    fresh.add(parse_mg_label(f[0], where), std::string(csv::trim(f[1])));
  }
  auto r = defaults();
  for (auto& [app, partners] : fresh.partners_) r.partners_[app] = std::move(partners);
  return r;
}

const std::vector<std::string>& BusinessRelations::partners(AppLabel app) const {
  static const std::vector<std::string> none;
  auto it = partners_.find(app);
  return it == partners_.end() ? none : it->second;
}

bool BusinessRelations::consistent(AppLabel app, std::string_view org_name) const {
  const auto name = lower(org_name);
  for (const auto& p : partners(app)) {
    if (!p.empty() && name.find(lower(p)) != std::string::npos) return true;
  }
  return false;
}

PruneResult prune_by_ownership(const std::map<PrefixId, PrefixLabel>& labeled, const PrefixDirectory& dir,
                               const BusinessRelations& rel) {
  PruneResult r;
  for (const auto& [prefix, label] : labeled) {
    const auto& org = dir.lookup(prefix);
    (rel.consistent(label.label, org.name) ? r.kept : r.pruned).emplace_back(prefix, label);
  }
  return r;
}

namespace {

std::map<PrefixId, std::vector<PortVector>> group_by_prefix(std::vector<PortVector> vectors) {
  std::map<PrefixId, std::vector<PortVector>> out;
  for (auto& v : vectors) out[v.prefix].push_back(std::move(v));
  return out;
}

}  // namespace

PipelineResult run_pipeline(std::span<const DirectedFlow> flows, const GroundTruthPrefixes& gt,
                            const GroundTruthPorts& gt_ports, const PrefixDirectory& dir,
                            const BusinessRelations& rel, const PipelineConfig& config) {
  PipelineResult out;
  // Step 1: ground-truth /24s, moved into flow address space.
  std::unordered_map<PrefixId, AppLabel> gt_app;
  std::unordered_set<PrefixId> gt_set;
  for (const auto& [real, app] : gt.prefixes) {
    PrefixId p = dir.anon_of(real).value_or(real);
    if (gt_app.emplace(p, app).second) {
      gt_set.insert(p);
      out.known.add_ground_truth(p, app);
    }
  }
  out.ground_truth_prefixes = gt_set.size();

  // Steps 2-3: vectors per prefix-hour, labeled by their prefix, then the tree.
  auto gt_vectors = extract_vectors(flows, gt_set, config.width, config.min_flows);
  for (auto& v : gt_vectors) v.label = gt_app.at(v.prefix);
  auto trained = train(gt_vectors, config.split, config.seed, config.tree);
  out.tree = std::move(trained.tree);
  out.report = std::move(trained.report);
  for (const auto& [prefix, vs] : group_by_prefix(gt_vectors)) {
    out.ground_truth_votes[prefix] = label_prefix(out.tree, vs);
  }
  out.ground_truth_with_vectors = out.ground_truth_votes.size();

  // Step 4: candidates from ground-truth ports.
  auto candidates = find_candidates(flows, gt_ports, gt_set);
  out.candidate_prefixes = candidates.size();

  // Steps 5-6: vectors for candidates, majority vote per prefix.
  std::unordered_set<PrefixId> cand_set(candidates.begin(), candidates.end());
  auto cand_vectors = extract_vectors(flows, cand_set, config.width, config.min_flows);
  for (const auto& [prefix, vs] : group_by_prefix(std::move(cand_vectors))) {
    out.candidate_votes[prefix] = label_prefix(out.tree, vs);
  }
  out.strong_candidates = out.candidate_votes.size();

  // Step 7: keep ownership-consistent candidates.
  auto pruned = prune_by_ownership(out.candidate_votes, dir, rel);
  for (const auto& [prefix, label] : pruned.kept) {
    if (out.known.add_verified(prefix, label.label, label.vote_fraction)) ++out.verified;
  }
  return out;
}

}  // namespace flowshift::mg
