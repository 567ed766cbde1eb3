// flowshift: command-line driver for the sampled-flow analysis pipeline.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flowshift/anomaly.hpp"
#include "flowshift/change.hpp"
#include "flowshift/classify.hpp"
#include "flowshift/csv.hpp"
#include "flowshift/error.hpp"
#include "flowshift/flow.hpp"
#include "flowshift/known_mg.hpp"
#include "flowshift/mg.hpp"
#include "flowshift/org.hpp"
#include "flowshift/store.hpp"
#include "flowshift/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace flowshift;

namespace {

struct RunConfig {
  fs::path base;
  std::optional<fs::path> flows, org_db, local_prefixes, anon_map, gt_prefixes, gt_ports, relations, port_map, known_mg;
  StudyCalendar calendar;
  std::vector<std::uint32_t> sampling_rates;
  double alpha = 0.05;
  double min_daily_change = kTerabyte;
  double role_threshold = 0.5;
  AnomalyConfig anomaly;
  mg::PipelineConfig mg;
  fs::path out = "out";
};

struct GlobalFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  bool strict = false;
};

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw input_error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DateInterval interval_of(const json& j) {
  return {parse_date(j.at(0).get<std::string>()), parse_date(j.at(1).get<std::string>())};
}

StudyCalendar calendar_of(const json& c) {
  StudyCalendar cal;
  if (c.contains("before")) cal.before = interval_of(c["before"]);
  if (c.contains("transition")) cal.transition = interval_of(c["transition"]);
  if (c.contains("after")) cal.after = interval_of(c["after"]);
  if (c.contains("work_hours")) {
    cal.work_start_hour = c["work_hours"].at(0).get<int>();
    cal.work_end_hour = c["work_hours"].at(1).get<int>();
  }
  cal.timezone_offset = c.value("timezone_offset", cal.timezone_offset);
  cal.validate();
  return cal;
}

json calendar_json(const StudyCalendar& cal) {
  return {{"before", {format_date(cal.before.first), format_date(cal.before.last)}},
          {"transition", {format_date(cal.transition.first), format_date(cal.transition.last)}},
          {"after", {format_date(cal.after.first), format_date(cal.after.last)}},
          {"work_hours", {cal.work_start_hour, cal.work_end_hour}},
          {"timezone_offset", cal.timezone_offset}};
}

RunConfig load_config(const GlobalFlags& g) {
  RunConfig rc;
  if (!g.config.empty()) {
    const fs::path path(g.config);
    rc.base = path.parent_path();
    try {
      const json j = json::parse(read_text(path));
      auto opt_path = [&](const char* key, std::optional<fs::path>& dst) {
        if (j.contains(key) && !j[key].is_null()) dst = rc.base / j[key].get<std::string>();
      };
      opt_path("flows", rc.flows);
      opt_path("org_db", rc.org_db);
      opt_path("local_prefixes", rc.local_prefixes);
      opt_path("anon_map", rc.anon_map);
      opt_path("gt_prefixes", rc.gt_prefixes);
      opt_path("gt_ports", rc.gt_ports);
      opt_path("relations", rc.relations);
      opt_path("port_map", rc.port_map);
      opt_path("known_mg", rc.known_mg);
      if (j.contains("calendar")) rc.calendar = calendar_of(j["calendar"]);
      if (j.contains("sampling_rates")) rc.sampling_rates = j["sampling_rates"].get<std::vector<std::uint32_t>>();
      rc.alpha = j.value("alpha", rc.alpha);
      rc.min_daily_change = j.value("min_daily_change", rc.min_daily_change);
      rc.role_threshold = j.value("role_threshold", rc.role_threshold);
      rc.anomaly.equilibrium.k_threshold = j.value("k_threshold", rc.anomaly.equilibrium.k_threshold);
      rc.anomaly.equilibrium.window = j.value("window", rc.anomaly.equilibrium.window);
      if (j.contains("rules")) {
        const auto& r = j["rules"];
        rc.anomaly.rules.syn_pps = r.value("syn_pps", rc.anomaly.rules.syn_pps);
        rc.anomaly.rules.icmp_pps = r.value("icmp_pps", rc.anomaly.rules.icmp_pps);
        if (r.contains("ntp_bps")) rc.anomaly.rules.ntp_bytes_per_s = r["ntp_bps"].get<double>() / 8;
        if (r.contains("dns_bps")) rc.anomaly.rules.dns_bytes_per_s = r["dns_bps"].get<double>() / 8;
      }
      rc.mg.seed = j.value("seed", rc.mg.seed);
      rc.mg.split = j.value("split", rc.mg.split);
      if (j.contains("out")) rc.out = rc.base / j["out"].get<std::string>();
    } catch (const json::exception& e) {
      throw input_error("config " + path.string() + ": " + e.what());
    }
  }
  if (!g.out.empty()) rc.out = g.out;
  if (g.seed) rc.mg.seed = *g.seed;
  if (g.alpha) rc.alpha = *g.alpha;
  if (!(rc.alpha >= 0 && rc.alpha < 1)) throw input_error("alpha must be within [0, 1)");
  if (!(rc.min_daily_change >= 0)) throw input_error("min_daily_change must be non-negative");
  if (!(rc.anomaly.equilibrium.k_threshold > 0)) throw input_error("k_threshold must be positive");
  for (const auto* p : {&rc.flows, &rc.org_db, &rc.local_prefixes, &rc.anon_map, &rc.gt_prefixes, &rc.gt_ports,
                        &rc.relations, &rc.port_map}) {
    if (*p && !fs::exists(**p)) throw input_error("missing input file " + (*p)->string());
  }
  return rc;
}

const fs::path& need(const std::optional<fs::path>& p, const char* what) {
  if (!p) throw input_error(std::string("config does not name the ") + what);
  return *p;
}

std::vector<UpsampledFlow> load_flows(const RunConfig& rc, bool strict) {
  std::ifstream in(need(rc.flows, "flow file"));
  if (!in) throw input_error("cannot open " + rc.flows->string());
  IngestConfig ic{rc.sampling_rates, strict};
  auto parsed = parse_flows(in, ic);
  for (std::size_t i = 0; i < parsed.errors.size() && i < 10; ++i) {
    std::cerr << "warning: line " << parsed.errors[i].line << ": " << parsed.errors[i].message << '\n';
  }
  if (parsed.errors.size() > 10) std::cerr << "warning: " << parsed.errors.size() << " malformed lines skipped\n";
  return upsample(parsed.flows);
}

PrefixDirectory load_dir(const RunConfig& rc) {
  auto load = load_directory(need(rc.org_db, "organization database"), need(rc.local_prefixes, "local prefix list"),
                             rc.anon_map);
  for (const auto& w : load.warnings) std::cerr << "warning: " << w << '\n';
  return std::move(load.directory);
}

PortMap load_ports(const RunConfig& rc) {
  if (!rc.port_map) return PortMap::defaults();
  std::ifstream in(*rc.port_map);
  return PortMap::from_config(in);
}

std::optional<KnownMgPrefixes> load_known(const RunConfig& rc, const PrefixDirectory& dir) {
  fs::path path = rc.known_mg ? *rc.known_mg : rc.out / "mg" / "known_mg.csv";
  if (fs::exists(path)) {
    std::ifstream in(path);
    return KnownMgPrefixes::read_csv(in);
  }
  if (rc.known_mg) throw input_error("missing known mg list " + path.string());
  if (!rc.gt_prefixes) return std::nullopt;
  std::ifstream in(*rc.gt_prefixes);
  auto gt = mg::expand_ground_truth(in);
  KnownMgPrefixes known;
  for (const auto& [p, app] : gt.prefixes) known.add_ground_truth(dir.anon_of(p).value_or(p), app);
  return known;
}

void write_text(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  write_file_atomic(p, s);
}

void write_series(const fs::path& p, const std::vector<SeriesPoint>& points) {
  std::ostringstream out;
  out << "timestamp,value\n";
  for (const auto& pt : points) out << format_timestamp(pt.t) << ',' << fmt(pt.value) << '\n';
  write_text(p, out.str());
}

json change_json(const ChangeResult& c) {
  json j;
  j["direction"] = to_string(c.direction);
  j["ratio_pct"] = format_ratio(c);
  j["p_less"] = c.p_less;
  j["p_greater"] = c.p_greater;
  j["before"] = c.before_stat;
  j["after"] = c.after_stat;
  j["basis"] = c.basis == RatioBasis::median ? "median" : "mean";
  return j;
}

std::string change_cols(const ChangeResult& c) {
  return std::string(to_string(c.direction)) + ',' + format_ratio(c) + ',' + fmt(c.p_less) + ',' + fmt(c.p_greater) +
         ',' + fmt(c.before_stat) + ',' + fmt(c.after_stat);
}

std::string safe_name(std::string s) {
  for (auto& ch : s) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.') ch = '_';
  }
  return s;
}

int cmd_synth(const GlobalFlags& g, const std::string& scenario) {
  auto spec = synth::ScenarioSpec::load(scenario);
  if (g.seed) spec.seed = *g.seed;
  const fs::path out = g.out.empty() ? fs::path("out") : fs::path(g.out);
  const auto corpus = synth::generate(spec);
  synth::write_corpus(corpus, out);
  json run;
  run["flows"] = "flows.csv";
  run["org_db"] = "orgs.csv";
  run["local_prefixes"] = "local.txt";
  run["anon_map"] = corpus.anon_map.empty() ? json() : json("anon_map.csv");
  run["gt_prefixes"] = "gt_prefixes.csv";
  run["gt_ports"] = "gt_ports.csv";
  run["calendar"] = calendar_json(spec.calendar);
  run["sampling_rates"] = spec.sampling_rates;
  run["seed"] = spec.seed;
  run["out"] = "results";
  write_text(out / "run.json", run.dump(2) + "\n");
  std::cout << "wrote " << corpus.flows.size() << " flows to " << (out / "flows.csv").string() << '\n';
  return 0;
}

int cmd_classify(const GlobalFlags& g) {
  const auto rc = load_config(g);
  const auto dir = load_dir(rc);
  const auto flows = load_flows(rc, g.strict);
  const auto ports = load_ports(rc);
  const auto known = load_known(rc, dir);
  const auto store = build_store(flows, dir, ports, ports.service_ports(), known ? &*known : nullptr);
  store.write(rc.out / "store");
  const auto total = store.total(Selector::total());
  std::cout << "classified " << flows.size() << " flows, " << total.bytes << " bytes into " << store.cells().size()
            << " cells\n";
  return 0;
}

int cmd_mg_train(const GlobalFlags& g) {
  const auto rc = load_config(g);
  const auto dir = load_dir(rc);
  const auto flows = load_flows(rc, g.strict);
  std::ifstream gt_in(need(rc.gt_prefixes, "ground-truth prefixes"));
  const auto gt = mg::expand_ground_truth(gt_in);
  for (const auto& w : gt.warnings) std::cerr << "warning: " << w << '\n';
  std::ifstream ports_in(need(rc.gt_ports, "ground-truth ports"));
  const auto gt_ports = mg::GroundTruthPorts::read(ports_in);
  auto rel = mg::BusinessRelations::defaults();
  if (rc.relations) {
    std::ifstream in(*rc.relations);
    rel = mg::BusinessRelations::read(in);
  }
  const auto directed = infer_directions(flows, dir, load_ports(rc).service_ports());
  const auto result = mg::run_pipeline(directed, gt, gt_ports, dir, rel, rc.mg);

  const auto mg_dir = rc.out / "mg";
  std::ostringstream known;
  result.known.write_csv(known);
  write_text(mg_dir / "known_mg.csv", known.str());
  std::ostringstream tree;
  result.tree.serialize(tree);
  write_text(mg_dir / "tree.txt", tree.str());

  nlohmann::ordered_json rep;
  rep["train_size"] = result.report.train_size;
  rep["test_size"] = result.report.test_size;
  rep["test_accuracy"] = result.report.test_accuracy;
  rep["ground_truth_prefixes"] = result.ground_truth_prefixes;
  rep["ground_truth_with_vectors"] = result.ground_truth_with_vectors;
  rep["candidate_prefixes"] = result.candidate_prefixes;
  rep["strong_candidates"] = result.strong_candidates;
  rep["verified"] = result.verified;
  auto& per = rep["per_label"] = nlohmann::ordered_json::array();
  for (const auto& s : result.report.per_label) {
    per.push_back({{"label", to_string(s.label)}, {"support", s.support}, {"precision", s.precision}, {"recall", s.recall}});
  }
  auto& counts = rep["prefix_counts"] = nlohmann::ordered_json::object();
  for (auto app : kMgLabels) {
    counts[std::string(to_string(app))] = {{"ground_truth", result.known.count(app, Provenance::ground_truth)},
                                           {"verified", result.known.count(app, Provenance::verified)}};
  }
  auto& votes = rep["candidate_votes"] = nlohmann::ordered_json::array();
  for (const auto& [p, v] : result.candidate_votes) {
    const auto real = dir.real_of(p);
    votes.push_back({{"prefix", p.to_string()},
                     {"real", real ? real->to_string() : p.to_string()},
                     {"label", to_string(v.label)},
                     {"vote_fraction", v.vote_fraction},
                     {"votes", v.votes},
                     {"kept", result.known.find(p).has_value()}});
  }
  write_text(mg_dir / "report.json", rep.dump(2) + "\n");
  std::cout << "test accuracy " << fmt(result.report.test_accuracy) << ", " << result.verified
            << " verified prefixes\n";
  return 0;
}

int cmd_change(const GlobalFlags& g) {
  const auto rc = load_config(g);
  const auto store = LabeledVolumeStore::read(rc.out / "store");
  const auto& cal = rc.calendar;
  const auto reports = rc.out / "reports";

  const auto table = app_change_table(store, cal, rc.alpha);
  std::ostringstream csv;
  csv << "label,volume_share,relevant,work_direction,work_ratio_pct,work_p_less,work_p_greater,work_before,work_after,"
         "rest_direction,rest_ratio_pct,rest_p_less,rest_p_greater,rest_before,rest_after\n";
  nlohmann::ordered_json apps;
  apps["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    csv << row.name << ',' << fmt(row.volume_share) << ',' << (row.relevant ? "yes" : "no") << ','
        << change_cols(row.work) << ',' << change_cols(row.rest) << '\n';
    apps["rows"].push_back({{"label", row.name},
                            {"volume_share", row.volume_share},
                            {"relevant", row.relevant},
                            {"work", change_json(row.work)},
                            {"rest", change_json(row.rest)}});
    const auto vol = store.series(row.selector);
    write_series(reports / "series" / (safe_name(row.name) + "_work.csv"),
                 five_min_series(vol, cal, HoursFilter::work).points);
    write_series(reports / "series" / (safe_name(row.name) + "_rest.csv"),
                 five_min_series(vol, cal, HoursFilter::rest).points);
  }
  apps["omitted"] = table.omitted;
  write_text(reports / "apps.csv", csv.str());
  write_text(reports / "apps.json", apps.dump(2) + "\n");

  const auto shifts = org_shift_tables(store, cal, rc.alpha, rc.min_daily_change);
  for (auto [name, cells] : {std::pair{"inbound", &shifts.inbound}, std::pair{"outbound", &shifts.outbound}}) {
    std::ostringstream out;
    out << "org_id,label,direction,ratio_pct,p_less,p_greater,mean_before,mean_after,daily_change_bytes\n";
    for (const auto& c : *cells) {
      out << csv::escape(c.org_id) << ',' << c.label << ',' << change_cols(c.change) << ',' << fmt(c.daily_change_bytes)
          << '\n';
      write_series(reports / "series" / ("org_" + std::string(name) + "_" + safe_name(c.org_id) + "_" + c.label + ".csv"),
                   c.daily);
    }
    write_text(reports / (std::string("org_") + name + ".csv"), out.str());
  }
  std::ostringstream peers;
  peers << "org_id,remote_category,orientation,direction,ratio_pct,p_less,p_greater,mean_before,mean_after,"
           "daily_change_bytes\n";
  for (const auto& c : shifts.peers) {
    peers << csv::escape(c.org_id) << ',' << to_string(c.remote) << ',' << to_string(c.orientation) << ','
          << change_cols(c.change) << ',' << fmt(c.daily_change_bytes) << '\n';
    write_series(reports / "series" /
                     ("peer_" + std::string(to_string(c.orientation)) + "_" + safe_name(c.org_id) + "_" +
                      std::string(to_string(c.remote)) + ".csv"),
                 c.daily);
  }
  write_text(reports / "org_peers.csv", peers.str());
  std::cout << table.rows.size() << " application rows, " << shifts.inbound.size() + shifts.outbound.size()
            << " organization cells, " << shifts.peers.size() << " peer cells\n";
  return 0;
}

int cmd_liveness(const GlobalFlags& g) {
  const auto rc = load_config(g);
  const auto dir = load_dir(rc);
  const auto flows = load_flows(rc, g.strict);
  std::vector<FlowRecord> plain(flows.begin(), flows.end());
  const auto rep = liveness_analysis(plain, dir, rc.calendar, rc.alpha);
  std::ostringstream out;
  out << "prefix,real_prefix,org_id,org_category,category,ratio_pct,p_less,p_greater,mean_before,mean_after\n";
  for (const auto& r : rep.records) {
    const auto real = dir.real_of(r.prefix).value_or(r.prefix);
    out << r.prefix.to_string() << ',' << real.to_string() << ',' << csv::escape(r.org_id) << ','
        << to_string(r.org_category) << ',' << to_string(r.category) << ',' << format_ratio(r.change) << ','
        << fmt(r.change.p_less) << ',' << fmt(r.change.p_greater) << ',' << fmt(r.change.before_stat) << ','
        << fmt(r.change.after_stat) << '\n';
  }
  write_text(rc.out / "reports" / "liveness.csv", out.str());
  std::ostringstream sum;
  sum << "category,inc,same,dec,inc_pct,same_pct,dec_pct\n";
  for (const auto& row : rep.summary) {
    sum << row.name << ',' << row.counts[0] << ',' << row.counts[1] << ',' << row.counts[2] << ','
        << fmt(row.percent[0]) << ',' << fmt(row.percent[1]) << ',' << fmt(row.percent[2]) << '\n';
  }
  write_text(rc.out / "reports" / "liveness_summary.csv", sum.str());
  std::cout << rep.records.size() << " active local prefixes, " << rep.inactive_prefixes << " inactive\n";
  return 0;
}

std::string pct(const std::optional<double>& r) { return r ? fmt(*r * 100.0) : "N/A"; }

int cmd_anomaly(const GlobalFlags& g) {
  const auto rc = load_config(g);
  const auto flows = load_flows(rc, g.strict);
  const auto rep = detect_anomalies(flows, rc.calendar, rc.anomaly);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  std::ostringstream events;
  std::size_t confirmed = 0;
  for (const auto& e : rep.events) {
    write_event_json(events, e);
    confirmed += e.confirmed;
  }
  write_text(rc.out / "reports" / "events.jsonl", events.str());
  std::ostringstream table;
  table << "kind,before_count,after_count,before_per_day,after_per_day,frequency_change_pct,before_duration_min,"
           "after_duration_min,duration_change_pct,before_zeta,after_zeta,zeta_change_pct\n";
  for (const auto& r : anomaly_change_table(rep.events, rc.calendar)) {
    table << to_string(r.kind) << ',' << r.before_count << ',' << r.after_count << ',' << fmt(r.before_per_day) << ','
          << fmt(r.after_per_day) << ',' << pct(r.frequency_ratio) << ',' << fmt(r.before_duration_min) << ','
          << fmt(r.after_duration_min) << ',' << pct(r.duration_ratio) << ',' << fmt(r.before_zeta) << ','
          << fmt(r.after_zeta) << ',' << pct(r.zeta_ratio) << '\n';
  }
  write_text(rc.out / "reports" / "anomaly_changes.csv", table.str());
  std::cout << rep.events.size() << " candidate events, " << confirmed << " confirmed\n";
  return 0;
}

int cmd_daily(const GlobalFlags& g, const std::string& day_before, const std::string& day_after) {
  const auto rc = load_config(g);
  const auto store = LabeledVolumeStore::read(rc.out / "store");
  const auto& cal = rc.calendar;
  const Date days[2] = {parse_date(day_before), parse_date(day_after)};
  const Date first = cal.before.first, last = cal.after.last;
  for (const auto& d : days) {
    if (d < first || last < d) throw input_error("day " + format_date(d) + " is outside the corpus window");
  }
  std::vector<std::pair<std::string, Selector>> selectors;
  for (auto l : kAppLabels) selectors.emplace_back(std::string(to_string(l)), Selector::of(l));
  for (auto c : {CoarseClass::candidate, CoarseClass::syn, CoarseClass::icmp, CoarseClass::otprot}) {
    selectors.emplace_back(std::string(to_string(c)), Selector::of(c));
  }
  std::size_t written = 0;
  for (const auto& [name, sel] : selectors) {
    const auto vol = store.series(sel);
    std::array<std::array<double, 24>, 2> hourly{};
    bool any = false;
    for (int k = 0; k < 2; ++k) {
      const Millis start = cal.day_start_utc(days[k]);
      for (auto it = vol.lower_bound(floor_div(start, kAnomalyBin));
           it != vol.end() && it->first * kAnomalyBin < start + kDay; ++it) {
        hourly[k][static_cast<std::size_t>((it->first * kAnomalyBin - start) / kHour)] += it->second;
        any = any || it->second > 0;
      }
    }
    if (!any) {
      std::cerr << "notice: " << name << " skipped, no traffic on either day\n";
      continue;
    }
    std::ostringstream out;
    out << "hour," << format_date(days[0]) << ',' << format_date(days[1]) << '\n';
    for (std::size_t h = 0; h < 24; ++h) out << h << ',' << fmt(hourly[0][h]) << ',' << fmt(hourly[1][h]) << '\n';
    write_text(rc.out / "reports" / "daily" / (safe_name(name) + ".csv"), out.str());
    ++written;
  }
  std::cout << written << " hourly profiles written\n";
  return 0;
}

int cmd_ip(const GlobalFlags& g, const std::string& ip_text) {
  const auto rc = load_config(g);
  const Ipv4 ip = parse_ipv4(ip_text);
  const auto dir = load_dir(rc);
  const auto flows = load_flows(rc, g.strict);
  const auto svc = load_ports(rc).service_ports();
  const auto directed = infer_directions(flows, dir, svc);
  const auto rep = ip_change_report(ip, directed, rc.calendar, svc, rc.alpha, rc.role_threshold);
  nlohmann::ordered_json j;
  j["ip"] = ip_text;
  j["role"] = to_string(rep.role.role);
  j["server_fraction"] = rep.role.server_fraction;
  j["work"] = change_json(rep.work);
  j["rest"] = change_json(rep.rest);
  const auto base = rc.out / "reports" / ("ip_" + safe_name(ip_text));
  write_text(base.string() + ".json", j.dump(2) + "\n");
  write_series(base.string() + "_hourly.csv", rep.hourly);
  write_series(base.string() + "_weekly.csv", rep.weekly);
  std::cout << ip_text << ": " << to_string(rep.role.role) << ", work " << to_string(rep.work.direction) << ' '
            << format_ratio(rep.work) << "%, rest " << to_string(rep.rest.direction) << ' ' << format_ratio(rep.rest)
            << "%\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampled-flow traffic shift analysis"};
  app.require_subcommand(1);
  GlobalFlags g;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--out", g.out, "Output directory");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  auto* alpha_opt = app.add_option("--alpha", alpha, "Significance level");
  app.add_flag("--strict", g.strict, "Fail on the first malformed flow line");

  std::string scenario, day_before, day_after, ip;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth_cmd->add_option("--scenario", scenario, "Scenario spec (JSON)")->required();
  auto* classify_cmd = app.add_subcommand("classify", "Build the labeled-volume store");
  auto* mg_cmd = app.add_subcommand("mg-train", "Train the mg classifier and verify candidate prefixes");
  auto* change_cmd = app.add_subcommand("change", "Application and organization change reports");
  auto* live_cmd = app.add_subcommand("liveness", "Prefix liveness changes");
  auto* anomaly_cmd = app.add_subcommand("anomaly", "Volumetric anomaly detection");
  auto* daily_cmd = app.add_subcommand("daily", "Hourly profiles of two days");
  daily_cmd->add_option("--day-before", day_before, "Local date before the shift")->required();
  daily_cmd->add_option("--day-after", day_after, "Local date after the shift")->required();
  auto* ip_cmd = app.add_subcommand("ip", "Per-address report");
  ip_cmd->add_option("--ip", ip, "IPv4 address")->required();
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (*seed_opt) g.seed = seed;
  if (*alpha_opt) g.alpha = alpha;

  try {
    if (*synth_cmd) return cmd_synth(g, scenario);
    if (*classify_cmd) return cmd_classify(g);
    if (*mg_cmd) return cmd_mg_train(g);
    if (*change_cmd) return cmd_change(g);
    if (*live_cmd) return cmd_liveness(g);
    if (*anomaly_cmd) return cmd_anomaly(g);
    if (*daily_cmd) return cmd_daily(g, day_before, day_after);
    if (*ip_cmd) return cmd_ip(g, ip);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
