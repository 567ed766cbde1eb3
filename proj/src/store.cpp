#include "flowshift/store.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "flowshift/csv.hpp"
#include "flowshift/error.hpp"

namespace flowshift {
namespace {

Orientation parse_orientation(std::string_view s) {
  for (auto o : {Orientation::inbound, Orientation::outbound, Orientation::local_local, Orientation::transit}) {
    if (to_string(o) == s) return o;
  }
  throw input_error("bad orientation '" + std::string(s) + "'");
}

template <typename T>
T to_num(std::string_view s, const char* what) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw input_error(std::string("bad ") + what + " in store");
  return v;
}

}  // namespace

bool Selector::matches(const StoreKey& k) const {
  switch (kind) {
    case Kind::total: return true;
    case Kind::coarse: return k.coarse == coarse;
    case Kind::label: return k.label == static_cast<std::int16_t>(index_of(label));
    case Kind::unlabeled_candidate: return k.coarse == CoarseClass::candidate && k.label < 0;
  }
  return false;
}

std::string Selector::name() const {
  switch (kind) {
    case Kind::total: return "total";
    case Kind::coarse: return std::string(to_string(coarse));
    case Kind::label: return std::string(to_string(label));
    case Kind::unlabeled_candidate: return "unlabeled";
  }
  return "?";
}

LabeledVolumeStore::LabeledVolumeStore() { orgs_.push_back({"?", "unknown", OrgCategory::unknown, false}); }

LabeledVolumeStore LabeledVolumeStore::for_directory(const PrefixDirectory& dir) {
  LabeledVolumeStore s;
  s.orgs_.clear();
  for (const auto& o : dir.organizations()) s.orgs_.push_back({o.id, o.name, o.category, o.local});
  return s;
}

void LabeledVolumeStore::add(const DirectedFlow& flow, const FlowClass& cls, const PrefixDirectory& dir) {
  StoreKey k;
  k.bin = floor_div(flow.ts_start, width_ms(BinWidth::five_min));
  k.coarse = cls.coarse;
  k.label = cls.label ? static_cast<std::int16_t>(index_of(*cls.label)) : std::int16_t{-1};
  k.orientation = flow.orientation;
  k.direction_known = flow.server_side != ServerSide::ambiguous;
  if (flow.orientation != Orientation::transit) {
    k.server_org = static_cast<std::uint32_t>(dir.org_index(PrefixId::of(flow.server_ip())));
    k.client_org = static_cast<std::uint32_t>(dir.org_index(PrefixId::of(flow.client_ip())));
  }
  auto& v = cells_[k];
  v.bytes += flow.bytes;
  v.packets += flow.packets;
  v.flow_count += 1;
}

std::map<std::int64_t, double> LabeledVolumeStore::series(const Selector& sel) const {
  std::map<std::int64_t, double> out;
  for (const auto& [k, v] : cells_) {
    if (sel.matches(k)) out[k.bin] += static_cast<double>(v.bytes);
  }
  return out;
}

BinVolume LabeledVolumeStore::total(const Selector& sel) const {
  BinVolume t;
  for (const auto& [k, v] : cells_) {
    if (sel.matches(k)) t += v;
  }
  return t;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw input_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw input_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void LabeledVolumeStore::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  // Idempotent over the output directory: stale day files go first.
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv") std::filesystem::remove(entry.path());
  }
  std::ostringstream orgs;
  orgs << "index,org_id,org_name,category,local\n";
  for (std::size_t i = 0; i < orgs_.size(); ++i) {
    const auto& o = orgs_[i];
    orgs << i << ',' << csv::escape(o.id) << ',' << csv::escape(o.name) << ',' << to_string(o.category) << ','
         << (o.local ? 1 : 0) << '\n';
  }
  write_file_atomic(dir / "orgs.csv", orgs.str());

  std::int64_t current_day = INT64_MIN;
  std::ostringstream day;
  auto flush = [&] {
    if (current_day == INT64_MIN) return;
    write_file_atomic(dir / (format_date(date_from_days(current_day)) + ".csv"), day.str());
    day.str("");
  };
  for (const auto& [k, v] : cells_) {
    const std::int64_t d = floor_div(k.bin * width_ms(BinWidth::five_min), kDay);
    if (d != current_day) {
      flush();
      current_day = d;
      day << "bin_start,coarse,label,server_org,client_org,orientation,direction_known,bytes,packets,flows\n";
    }
    day << format_timestamp(k.bin * width_ms(BinWidth::five_min)) << ',' << to_string(k.coarse) << ','
        << (k.label < 0 ? std::string_view("") : to_string(kAppLabels[k.label])) << ',' << k.server_org << ','
        << k.client_org << ',' << to_string(k.orientation) << ',' << (k.direction_known ? 1 : 0) << ',' << v.bytes
        << ',' << v.packets << ',' << v.flow_count << '\n';
  }
  flush();
}

LabeledVolumeStore LabeledVolumeStore::read(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw input_error("no labeled-volume store at " + dir.string());
  LabeledVolumeStore s;
  s.orgs_.clear();
  {
    std::ifstream in(dir / "orgs.csv");
    if (!in) throw input_error("store is missing orgs.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (csv::skippable(line)) continue;
      auto f = csv::split(line);
      if (f.size() != 5) throw input_error("bad orgs.csv row in store");
      s.orgs_.push_back({f[1], f[2], parse_category(f[3]), f[4] == "1"});
    }
  }
  std::vector<std::filesystem::path> days;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv" && entry.path().filename() != "orgs.csv") days.push_back(entry.path());
  }
  std::sort(days.begin(), days.end());
  for (const auto& p : days) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (csv::skippable(line)) continue;
      auto f = csv::split(line);
      if (f.size() != 10) throw input_error("bad store row in " + p.filename().string());
      StoreKey k;
      k.bin = floor_div(parse_timestamp(f[0]), width_ms(BinWidth::five_min));
      auto coarse = parse_coarse(f[1]);
      if (!coarse) throw input_error("bad coarse class in store");
      k.coarse = *coarse;
      if (!f[2].empty()) {
        auto l = parse_label(f[2]);
        if (!l) throw input_error("bad label in store");
        k.label = static_cast<std::int16_t>(index_of(*l));
      }
      k.server_org = to_num<std::uint32_t>(f[3], "server_org");
      k.client_org = to_num<std::uint32_t>(f[4], "client_org");
      if (k.server_org >= s.orgs_.size() || k.client_org >= s.orgs_.size()) throw input_error("org index out of range in store");
      k.orientation = parse_orientation(f[5]);
      k.direction_known = f[6] == "1";
      BinVolume v{to_num<std::uint64_t>(f[7], "bytes"), to_num<std::uint64_t>(f[8], "packets"),
                  to_num<std::uint64_t>(f[9], "flows")};
      s.cells_[k] += v;
    }
  }
  return s;
}

LabeledVolumeStore build_store(std::span<const UpsampledFlow> flows, const PrefixDirectory& dir,
                               const PortMap& ports, const ServicePorts& svc, const KnownMgPrefixes* mg) {
  auto store = LabeledVolumeStore::for_directory(dir);
  for (const auto& f : flows) {
    auto d = infer_direction(f, dir, svc);
    store.add(d, classify_flow(d, ports, svc, mg), dir);
  }
  return store;
}

}  // namespace flowshift
