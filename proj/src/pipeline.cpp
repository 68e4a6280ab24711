#include "harmonia/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "harmonia/areal.hpp"
#include "harmonia/demo.hpp"
#include "harmonia/error.hpp"
#include "harmonia/geojson.hpp"
#include "harmonia/kriging.hpp"
#include "harmonia/parallel.hpp"
#include "harmonia/rng.hpp"
#include "harmonia/temporal.hpp"

namespace harmonia {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"krige",          "aggregate-temporal", "aggregate-areal",
                                              "survey-weights", "survey-estimate",    "gvf",
                                              "panel-build",    "validate",           "demo"};
  return names;
}

std::string resolve_output_dir(const std::optional<std::string>& flag, const RunConfig& cfg) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return cfg.output_dir;
}

std::string content_hash(std::string_view content) { return fmt::format("{:016x}", fnv1a(content)); }

namespace {

void log(const std::string& msg) { fmt::print(stderr, "harmonia: {}\n", msg); }

// Output files of one command, hashed for the manifest.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    write_file((dir_ / name).string(), content);
    hashes_[name] = content_hash(content);
  }
  void table(const std::string& name, const Table& t) { write(name, to_csv(t)); }
  const json& hashes() const { return hashes_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  json hashes_ = json::object();
};

json base_manifest(const std::string& command, const RunConfig& cfg) {
  json cfg_json = config_to_json(cfg);
  cfg_json.erase("output_dir");  // run location is not part of the record
  return json{{"tool", "harmonia"}, {"command", command}, {"config", cfg_json}};
}

void finish_manifest(OutputSet& out, json manifest) {
  manifest["outputs"] = out.hashes();
  out.write("manifest.json", manifest.dump(2) + "\n");
}

std::string required(const CommandArgs& args, const std::string& role) {
  auto it = args.inputs.find(role);
  if (it == args.inputs.end() || it->second.empty()) {
    throw Error(Errc::empty_input, fmt::format("missing required input --{}", role));
  }
  return it->second;
}

TuningConfig tuning_of(const RunConfig& cfg) {
  TuningConfig t = cfg.tuning;
  t.seed = cfg.seed;
  t.threads = cfg.threads;
  return t;
}

json spec_json(const VariogramSpec& s) {
  return json{{"family", s.model.name()}, {"nugget", s.nugget}, {"partial_sill", s.partial_sill}, {"range", s.range}};
}

std::string field_label(const GridFieldSnapshot& f) {
  std::string label = fmt::format("{}/{}", f.variable, f.year);
  if (f.sector) label += "/" + *f.sector;
  return label;
}

json alignment_json(const GridFieldSnapshot& f, const AlignmentResult& r) {
  json cv = json::array();
  for (const auto& e : r.cv_table) cv.push_back({{"stage", e.stage}, {"candidate", e.candidate}, {"rmse", e.rmse}});
  return json{{"field", field_label(f)},
              {"family", r.chosen_family.name()},
              {"nmax", r.chosen_nmax},
              {"variogram", spec_json(r.spec)},
              {"cv", cv}};
}

using Results = std::vector<std::pair<const GridFieldSnapshot*, AlignmentResult>>;

Results align_all(const std::vector<GridFieldSnapshot>& fields, const std::vector<AreaUnit>& areas,
                  const TuningConfig& tcfg, std::size_t threads) {
  std::vector<AlignmentResult> slots(fields.size());
  TuningConfig inner = tcfg;
  // Parallelism goes to the fields when there are several of them.
  if (fields.size() > 1) inner.threads = 1;
  parallel_for(fields.size(), fields.size() > 1 ? threads : 1,
               [&](std::size_t i) { slots[i] = align_field(fields[i], areas, inner); });
  Results out;
  for (std::size_t i = 0; i < fields.size(); ++i) out.emplace_back(&fields[i], std::move(slots[i]));
  return out;
}

// ---- krige ----------------------------------------------------------------

int cmd_krige(const RunConfig& cfg, const CommandArgs& args, OutputSet& out) {
  const auto fields = fields_from_table(read_csv(required(args, "field")));
  const auto areas = read_areas_geojson(required(args, "areas"), args.id_property);
  log(fmt::format("kriging {} field(s) onto {} areas", fields.size(), areas.size()));
  const auto results = align_all(fields, areas, tuning_of(cfg), cfg.threads);
  out.table("predictions.csv", predictions_table(results));
  out.table("cv_table.csv", cv_table(results));
  json manifest = base_manifest("krige", cfg);
  json fitted = json::array();
  for (const auto& [f, r] : results) fitted.push_back(alignment_json(*f, r));
  manifest["results"] = {{"fields", fitted}};
  manifest["inputs"] = {{"field", required(args, "field")}, {"areas", required(args, "areas")}};
  finish_manifest(out, manifest);
  return exit_code::ok;
}

// ---- aggregate-temporal -----------------------------------------------------

std::vector<LongRecord> long_records_from_table(const Table& t) {
  const auto c_cell = t.column("cell_id"), c_x = t.column("x"), c_y = t.column("y"),
             c_time = t.find_column("timestamp") ? t.column("timestamp") : t.column("time"), c_var = t.column("variable"),
             c_val = t.column("value");
  std::vector<LongRecord> out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    out.push_back({r[c_cell], parse_number(r[c_x]), parse_number(r[c_y]), parse_timestamp(r[c_time]), r[c_var],
                   parse_optional_number(r[c_val])});
  }
  return out;
}

Table summary_table(const std::vector<SummaryRow>& rows) {
  Table t{{"cell_id", "x", "y", "year", "season", "variable", "stat", "value"}, {}};
  t.rows.reserve(rows.size());
  for (const auto& r : rows) {
    t.rows.push_back({r.cell_id, format_number(r.x), format_number(r.y), std::to_string(r.year), r.period, r.variable,
                      r.stat, format_number(r.value)});
  }
  return t;
}

TemporalConfig temporal_config(const RunConfig& cfg) {
  TemporalConfig t;
  t.wind = cfg.wd_convention;
  t.magnus = cfg.magnus;
  return t;
}

int cmd_aggregate_temporal(const RunConfig& cfg, const CommandArgs& args, OutputSet& out) {
  const auto records = long_records_from_table(read_csv(required(args, "input")));
  const auto rows = aggregate_temporal(records, temporal_config(cfg));
  std::size_t violations = 0;
  for (const auto& r : rows) {
    if (r.stat != "mean" || !r.value) continue;
    if (auto v = physical_violation(r.variable, *r.value)) {
      ++violations;
      log(fmt::format("warning: {} {} {}: {}", r.cell_id, r.year, r.period, *v));
    }
  }
  out.table("temporal_summary.csv", summary_table(rows));
  json manifest = base_manifest("aggregate-temporal", cfg);
  manifest["inputs"] = {{"input", required(args, "input")}};
  manifest["results"] = {{"records", records.size()}, {"summary_rows", rows.size()}, {"warnings", violations}};
  finish_manifest(out, manifest);
  return exit_code::ok;
}

// ---- aggregate-areal --------------------------------------------------------

Table municipal_aggregate(const Table& t, const Crosswalk& xwalk, AggregationMethod method) {
  const auto c_m = t.column("municipality"), c_y = t.column("year"), c_var = t.column("variable"),
             c_val = t.column("value");
  std::map<std::pair<std::string, int>, std::vector<MunicipalValue>> groups;
  for (const auto& r : t.rows) groups[{r[c_var], parse_int(r[c_y])}].emplace_back(r[c_m], parse_optional_number(r[c_val]));
  Table out{{"area", "year", "variable", "value"}, {}};
  std::vector<std::tuple<std::string, int, std::string, std::optional<double>>> rows;
  for (const auto& [key, values] : groups) {
    for (const auto& [area, v] : aggregate_crosswalk(values, xwalk, method)) rows.emplace_back(area, key.second, key.first, v);
  }
  std::sort(rows.begin(), rows.end());
  for (const auto& [a, y, var, v] : rows) out.rows.push_back({a, std::to_string(y), var, format_number(v)});
  return out;
}

std::string share_variable(int code) {
  std::string name(land_cover_name(code));
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) {
    return c == '-' || c == ' ' ? '_' : static_cast<char>(std::tolower(c));
  });
  return "lc_" + name;
}

int cmd_aggregate_areal(const RunConfig& cfg, const CommandArgs& args, OutputSet& out) {
  json manifest = base_manifest("aggregate-areal", cfg);
  json inputs = json::object();
  json results = json::object();
  bool any = false;

  if (args.inputs.contains("municipal")) {
    any = true;
    const auto xwalk = crosswalk_from_table(read_csv(required(args, "crosswalk")));
    const auto method = parse_aggregation(args.method);
    out.table("areal_values.csv", municipal_aggregate(read_csv(required(args, "municipal")), xwalk, method));
    inputs["municipal"] = required(args, "municipal");
    inputs["crosswalk"] = required(args, "crosswalk");
    results["method"] = args.method;
  }

  std::vector<AreaUnit> areas;
  if (args.inputs.contains("landcover") || args.inputs.contains("elevation")) {
    areas = read_areas_geojson(required(args, "areas"), args.id_property);
    inputs["areas"] = required(args, "areas");
  }

  if (args.inputs.contains("landcover")) {
    any = true;
    if (!(args.cell_size > 0.0)) throw Error(Errc::domain, "--cell-size must be positive for land-cover shares");
    const Table t = read_csv(required(args, "landcover"));
    const auto c_x = t.column("x"), c_y = t.column("y"), c_code = t.column("code"), c_year = t.column("snapshot_year");
    std::map<int, std::vector<ClassCell>> by_snapshot;
    for (const auto& r : t.rows) {
      by_snapshot[parse_int(r[c_year])].push_back({{parse_number(r[c_x]), parse_number(r[c_y])}, parse_int(r[c_code])});
    }
    const SnapshotSchedule schedule = args.schedule == "gdlc" ? SnapshotSchedule::gdlc()
                                      : args.schedule == "corine"
                                          ? SnapshotSchedule::corine()
                                          : throw Error(Errc::parse, "unknown schedule '" + args.schedule + "'");
    std::map<int, std::map<std::string, std::map<int, double>>> shares;  // snapshot -> area -> class -> %
    for (auto& [snap, cells] : by_snapshot) {
      if (args.reclass == "corine") cells = reclassify(cells, ReclassTable::corine());
      else if (args.reclass != "none") throw Error(Errc::parse, "unknown reclass table '" + args.reclass + "'");
      const auto tally = tally_cells(cells, areas);
      for (const auto& a : areas) {
        shares[snap][a.id()] = area_shares(tally.at(a.id()), args.cell_size * args.cell_size, a.area());
      }
    }
    std::vector<int> years = args.years;
    if (years.empty()) {
      for (const auto& r : schedule.ranges())
        for (int y = r.first_year; y <= r.last_year; ++y) years.push_back(y);
    }
    Table lc{{"area", "year", "snapshot_year", "variable", "value"}, {}};
    for (const auto& a : areas) {
      for (int y : years) {
        const int snap = expand_piecewise(schedule, y);
        auto it = shares.find(snap);
        if (it == shares.end()) continue;  // snapshot not supplied
        for (int code = 1; code <= 9; ++code) {
          const auto& m = it->second.at(a.id());
          auto c = m.find(code);
          lc.rows.push_back({a.id(), std::to_string(y), std::to_string(snap), share_variable(code),
                             format_number(c == m.end() ? 0.0 : c->second)});
        }
      }
    }
    out.table("landcover_shares.csv", lc);
    inputs["landcover"] = required(args, "landcover");
    results["schedule"] = args.schedule;
    results["reclass"] = args.reclass;
  }

  if (args.inputs.contains("elevation")) {
    any = true;
    const Table t = read_csv(required(args, "elevation"));
    const auto c_x = t.column("x"), c_y = t.column("y"), c_z = t.column("elevation");
    std::map<std::string, std::vector<double>> by_area;
    for (const auto& r : t.rows) {
      const Point p{parse_number(r[c_x]), parse_number(r[c_y])};
      for (const auto& a : areas) {
        if (a.contains(p)) {
          by_area[a.id()].push_back(parse_number(r[c_z]));
          break;
        }
      }
    }
    Table el{{"area", "variable", "value"}, {}};
    for (const auto& a : areas) {
      auto it = by_area.find(a.id());
      if (it == by_area.end()) {
        for (const char* v : {"elev_plain", "elev_hill", "elev_mountain"}) el.rows.push_back({a.id(), v, "NA"});
        continue;
      }
      const auto s = elevation_band_shares(it->second);
      el.rows.push_back({a.id(), "elev_plain", format_number(s.plain)});
      el.rows.push_back({a.id(), "elev_hill", format_number(s.hill)});
      el.rows.push_back({a.id(), "elev_mountain", format_number(s.mountain)});
    }
    out.table("elevation_shares.csv", el);
    inputs["elevation"] = required(args, "elevation");
  }

  if (!any) throw Error(Errc::empty_input, "aggregate-areal needs --municipal, --landcover or --elevation");
  manifest["inputs"] = inputs;
  manifest["results"] = results;
  finish_manifest(out, manifest);
  return exit_code::ok;
}

// ---- survey ----------------------------------------------------------------

std::vector<int> survey_years(const std::vector<FarmRecord>& farms, const std::vector<int>& extra) {
  std::set<int> years(extra.begin(), extra.end());
  for (const auto& f : farms) years.insert(f.year);
  return {years.begin(), years.end()};
}

std::vector<std::string> farm_variables(const std::vector<FarmRecord>& farms) {
  std::set<std::string> vars;
  for (const auto& f : farms)
    for (const auto& [k, _] : f.values) vars.insert(k);
  return {vars.begin(), vars.end()};
}

json method_counts(const std::vector<DomainWeights>& weights) {
  std::map<std::string, int> counts;
  for (const auto& w : weights) counts[w.missing ? "missing" : std::string(to_string(w.method))] += 1;
  return counts;
}

int cmd_survey(const RunConfig& cfg, const CommandArgs& args, OutputSet& out, bool estimate) {
  const auto census = census_from_table(read_csv(required(args, "census")));
  const auto farms = farms_from_table(read_csv(required(args, "farms")));
  const auto xwalk = crosswalk_from_table(read_csv(required(args, "crosswalk")));
  const auto strata = build_strata(census, farms, xwalk, survey_years(farms, args.years));
  const auto weights = build_all_weights(strata, {cfg.tolerances.rake_tol, cfg.tolerances.rake_max_iter});
  out.table("weights.csv", weights_table(weights));
  json manifest = base_manifest(estimate ? "survey-estimate" : "survey-weights", cfg);
  manifest["inputs"] = {{"census", required(args, "census")},
                        {"farms", required(args, "farms")},
                        {"crosswalk", required(args, "crosswalk")}};
  manifest["results"] = {{"domains", weights.size()}, {"methods", method_counts(weights)}};
  if (estimate) {
    const auto est = estimate_domains(strata, weights, farms, farm_variables(farms));
    out.table("estimates.csv", estimates_table(est));
  }
  finish_manifest(out, manifest);
  return exit_code::ok;
}

// ---- gvf ---------------------------------------------------------------------

json gvf_json(const std::vector<GvfRun>& runs) {
  json j = json::array();
  for (const auto& run : runs) {
    json entry{{"variable", run.variable}};
    if (run.result.chosen) {
      const auto& m = *run.result.chosen;
      entry["model"] = m.name();
      entry["coefficients"] = {{"alpha", m.alpha}, {"beta", m.beta}, {"gamma1", m.gamma1}, {"gamma2", m.gamma2}};
      entry["metrics"] = {{"rmse_log", m.metrics.rmse_log},
                          {"reduction_upper", m.metrics.reduction_upper},
                          {"increase_share", m.metrics.increase_share}};
      entry["n_fit"] = m.n_fit;
    } else {
      entry["model"] = nullptr;
    }
    j.push_back(entry);
  }
  return j;
}

int cmd_gvf(const RunConfig& cfg, const CommandArgs& args, OutputSet& out) {
  const auto estimates = estimates_from_table(read_csv(required(args, "estimates")));
  const auto runs = run_gvf(estimates, cfg.tolerances.gvf_tau);
  out.table("gvf_variances.csv", gvf_variance_table(runs));
  out.table("gvf_candidates.csv", gvf_candidate_table(runs));
  json manifest = base_manifest("gvf", cfg);
  manifest["inputs"] = {{"estimates", required(args, "estimates")}};
  manifest["results"] = {{"models", gvf_json(runs)}};
  finish_manifest(out, manifest);
  return exit_code::ok;
}

// ---- panel -------------------------------------------------------------------

void write_panel(OutputSet& out, const Panel& panel) {
  out.table("panel_wide.csv", panel_wide_table(panel));
  out.table("panel_long.csv", panel_long_table(panel));
  out.table("missing_report.csv", missing_table(missing_report(panel)));
}

json panel_summary(const Panel& panel) {
  std::set<std::string> areas;
  std::set<int> years;
  for (const auto& [a, y] : panel.rows) {
    areas.insert(a);
    years.insert(y);
  }
  json cols = json::array();
  for (const auto& c : panel.columns) cols.push_back({{"source", c.source}, {"variable", c.variable}});
  return json{{"rows", panel.rows.size()}, {"areas", areas.size()}, {"years", years}, {"columns", cols}};
}

int cmd_panel_build(const RunConfig& cfg, const CommandArgs& args, OutputSet& out) {
  if (args.fragments.empty()) throw Error(Errc::empty_input, "panel-build needs at least one --fragment");
  std::vector<Fragment> fragments;
  for (const auto& path : args.fragments) fragments.push_back(fragment_from_table(read_csv(path), fs::path(path).stem().string()));
  std::optional<PanelUniverse> universe;
  if (args.inputs.contains("areas")) {
    if (args.years.empty()) throw Error(Errc::empty_input, "--areas needs --years for the panel universe");
    PanelUniverse u;
    for (const auto& a : read_areas_geojson(required(args, "areas"), args.id_property)) u.areas.push_back(a.id());
    u.years = args.years;
    universe = std::move(u);
  }
  const Panel panel = assemble(fragments, universe);
  write_panel(out, panel);
  json manifest = base_manifest("panel-build", cfg);
  manifest["inputs"] = {{"fragments", args.fragments}};
  manifest["results"] = panel_summary(panel);
  finish_manifest(out, manifest);
  return exit_code::ok;
}

ValidationRules rules_of(const RunConfig& cfg) {
  ValidationRules rules;
  rules.share_tol = cfg.tolerances.share_tol;
  rules.fidelity_threshold = cfg.tolerances.fidelity_threshold;
  return rules;
}

int report_violations(const RunConfig& cfg, const std::vector<Violation>& violations) {
  for (const auto& v : violations) {
    log(fmt::format("{}: {} {} {} {}", cfg.strict ? "error" : "warning", v.rule, v.variable,
                    v.area.empty() ? "-" : v.area + "/" + std::to_string(v.year), v.message));
  }
  if (cfg.strict && !violations.empty()) {
    log(fmt::format("{} validation violation(s) under --strict", violations.size()));
    return exit_code::validation;
  }
  return exit_code::ok;
}

int cmd_validate(const RunConfig& cfg, const CommandArgs& args, OutputSet& out) {
  const Panel panel = panel_from_long_table(read_csv(required(args, "panel")));
  ValidationRules rules = rules_of(cfg);
  if (args.inputs.contains("fidelity")) {
    const Table t = read_csv(required(args, "fidelity"));
    const auto c_var = t.column("variable"), c_p = t.column("predicted"), c_o = t.column("observed");
    std::map<std::string, FidelityInput> by_var;
    for (const auto& r : t.rows) {
      auto& f = by_var[r[c_var]];
      f.variable = r[c_var];
      f.predicted.push_back(parse_number(r[c_p]));
      f.observed.push_back(parse_number(r[c_o]));
    }
    for (auto& [_, f] : by_var) rules.fidelity.push_back(std::move(f));
  }
  const auto violations = validate(panel, rules);
  out.table("violations.csv", violations_table(violations));
  json manifest = base_manifest("validate", cfg);
  manifest["inputs"] = {{"panel", required(args, "panel")}};
  manifest["results"] = {{"violations", violations.size()}};
  finish_manifest(out, manifest);
  return report_violations(cfg, violations);
}

// ---- demo --------------------------------------------------------------------

struct ClimateFields {
  std::vector<GridFieldSnapshot> fields;
  std::size_t summary_rows = 0;
};

// Per-cell annual/seasonal summaries turned into one field per variable-year.
ClimateFields demo_climate(const DemoData& data, const RunConfig& cfg) {
  const TemporalConfig tcfg = temporal_config(cfg);
  std::vector<std::vector<SummaryRow>> per_cell(data.cells.size());
  parallel_for(data.cells.size(), cfg.threads,
               [&](std::size_t i) { per_cell[i] = aggregate_temporal(data.cell_series(i), tcfg); });

  std::map<std::pair<std::string, int>, std::vector<Sample>> samples;
  ClimateFields out;
  for (std::size_t i = 0; i < per_cell.size(); ++i) {
    out.summary_rows += per_cell[i].size();
    for (const auto& r : per_cell[i]) {
      if (!r.value) continue;
      std::string name;
      if (r.variable == "t2m" && r.stat == "mean" && r.period == "Summer") name = "t2m_summer";
      else if (r.variable == "t2m" && r.stat == "mean" && r.period == "Winter") name = "t2m_winter";
      else if (r.variable == "tp" && r.stat == "sum" && r.period == "ANNUAL") name = "tp_sum";
      else if (r.variable == "rh" && r.stat == "mean" && r.period == "ANNUAL") name = "rh_mean";
      else continue;
      samples[{name, r.year}].push_back({data.cells[i], *r.value});
    }
  }
  for (auto& [key, s] : samples) out.fields.push_back(GridFieldSnapshot::make(key.first, key.second, std::nullopt, s));
  return out;
}

Fragment fragment_of(const std::string& source, const std::vector<PanelCell>& cells) {
  Fragment f{source, cells};
  for (auto& c : f.cells) c.source = source;
  return f;
}

int cmd_demo(const RunConfig& cfg, const CommandArgs& args, OutputSet& out) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const DemoData data = make_demo_data(cfg.seed);
  const TuningConfig tcfg = tuning_of(cfg);

  // Inputs, so the individual commands can be replayed on them.
  out.write("inputs/areas.geojson", to_geojson(data.areas));
  {
    Table xw{{"municipality", "area"}, {}};
    for (const auto& [m, a] : data.crosswalk) xw.rows.push_back({m, a});
    out.table("inputs/crosswalk.csv", xw);
    Table ls{{"municipality", "year", "variable", "value"}, {}};
    for (const auto& r : data.livestock) ls.rows.push_back({r.municipality, std::to_string(r.year), r.variable, format_number(r.value)});
    out.table("inputs/livestock.csv", ls);
    Table cs{{"municipality", "size", "spec", "year", "farms"}, {}};
    for (const auto& c : data.census) {
      cs.rows.push_back({c.municipality, std::string(to_string(c.size)), std::string(to_string(c.spec)),
                         std::to_string(c.year), format_number(c.farms)});
    }
    out.table("inputs/census.csv", cs);
    Table fm{{"farm_id", "area", "size", "spec", "year", "uaa"}, {}};
    for (const auto& f : data.farms) {
      fm.rows.push_back({f.farm_id, f.area, std::string(to_string(f.size)), std::string(to_string(f.spec)),
                         std::to_string(f.year), format_number(f.values.at("uaa"))});
    }
    out.table("inputs/farms.csv", fm);
  }

  // Climate: temporal summaries, then block kriging of each field.
  const auto climate = demo_climate(data, cfg);
  out.table("fields.csv", fields_to_table(climate.fields));
  const auto t1 = clock::now();
  const auto aligned = align_all(climate.fields, data.areas, tcfg, cfg.threads);
  out.table("predictions.csv", predictions_table(aligned));
  out.table("cv_table.csv", cv_table(aligned));

  // Fidelity: the chosen model re-evaluated on cell-sized blocks.
  std::vector<AreaUnit> cell_blocks;
  for (std::size_t i = 0; i < data.cells.size(); ++i) {
    const double h = data.cell_size / 2.0;
    const auto& p = data.cells[i];
    cell_blocks.push_back(make_rectangle(data.cell_ids[i], p.x - h, p.y - h, p.x + h, p.y + h));
  }
  std::vector<FidelityInput> fidelity(aligned.size());
  parallel_for(aligned.size(), cfg.threads, [&](std::size_t k) {
    const auto& [field, res] = aligned[k];
    FidelityInput& f = fidelity[k];
    f.variable = field_label(*field);
    for (std::size_t i = 0; i < field->samples.size(); ++i) {
      const auto pred = predict_block(*field, cell_blocks[i], res.spec, res.chosen_nmax, tcfg.spacing);
      f.predicted.push_back(pred.error ? std::nan("") : pred.mean);
      f.observed.push_back(field->samples[i].value);
    }
  });
  Table fid{{"variable", "predicted", "observed"}, {}};
  for (const auto& f : fidelity)
    for (std::size_t i = 0; i < f.predicted.size(); ++i)
      fid.rows.push_back({f.variable, format_number(f.predicted[i]), format_number(f.observed[i])});
  out.table("fidelity.csv", fid);
  const auto t2 = clock::now();

  std::vector<PanelCell> climate_cells;
  for (const auto& [field, res] : aligned) {
    for (const auto& p : res.predictions) {
      climate_cells.push_back({p.area_id, field->year, field->variable,
                               p.error ? std::nullopt : std::optional<double>(p.mean), "climate"});
    }
  }

  // Livestock: municipal counts summed to areas.
  const Crosswalk xwalk(data.crosswalk);
  std::vector<PanelCell> livestock_cells;
  {
    std::map<int, std::vector<MunicipalValue>> by_year;
    for (const auto& r : data.livestock) by_year[r.year].emplace_back(r.municipality, r.value);
    for (const auto& [y, values] : by_year) {
      for (const auto& [area, v] : aggregate_crosswalk(values, xwalk, AggregationMethod::sum)) {
        livestock_cells.push_back({area, y, "livestock_heads", v, "livestock"});
      }
    }
  }

  // Survey: weights, HT estimates, GVF-regularised variances.
  const auto strata = build_strata(data.census, data.farms, xwalk, data.years);
  const auto weights = build_all_weights(strata, {cfg.tolerances.rake_tol, cfg.tolerances.rake_max_iter});
  const auto estimates = estimate_domains(strata, weights, data.farms, {"uaa"});
  const auto gvf = run_gvf(estimates, cfg.tolerances.gvf_tau);
  out.table("weights.csv", weights_table(weights));
  out.table("estimates.csv", estimates_table(estimates));
  out.table("gvf_variances.csv", gvf_variance_table(gvf));
  out.table("gvf_candidates.csv", gvf_candidate_table(gvf));
  std::vector<PanelCell> survey_cells;
  for (const auto& e : estimates) {
    survey_cells.push_back({e.area, e.year, e.variable + "_mean", e.missing ? std::nullopt : std::optional(e.mean),
                            "survey"});
  }
  const auto t3 = clock::now();

  PanelUniverse universe;
  for (const auto& a : data.areas) universe.areas.push_back(a.id());
  universe.years = data.years;
  const Panel panel = assemble({fragment_of("climate", climate_cells), fragment_of("livestock", livestock_cells),
                                fragment_of("survey", survey_cells)},
                               universe);
  write_panel(out, panel);

  ValidationRules rules = rules_of(cfg);
  rules.fidelity = fidelity;
  const auto violations = validate(panel, rules);
  out.table("violations.csv", violations_table(violations));

  json fitted = json::array();
  for (const auto& [f, r] : aligned) fitted.push_back(alignment_json(*f, r));
  json fid_json = json::object();
  for (const auto& f : fidelity) fid_json[f.variable] = pearson(f.predicted, f.observed);

  json manifest = base_manifest("demo", cfg);
  manifest["data"] = {{"areas", data.areas.size()},
                      {"cells", data.cells.size()},
                      {"municipalities", data.crosswalk.size()},
                      {"years", data.years},
                      {"farms", data.farms.size()},
                      {"temporal_summary_rows", climate.summary_rows},
                      {"streams", {"demo-data/climate/<cell>", "demo-data/livestock", "demo-data/census",
                                   "demo-data/farms", "cv-folds/<repeat>"}}};
  manifest["results"] = {{"kriging", fitted},
                         {"fidelity_pearson", fid_json},
                         {"survey_methods", method_counts(weights)},
                         {"gvf", gvf_json(gvf)},
                         {"panel", panel_summary(panel)},
                         {"violations", violations.size()}};
  finish_manifest(out, manifest);

  auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
  log(fmt::format("demo: data+temporal {:.2f}s, kriging {:.2f}s, survey+gvf {:.2f}s, total {:.2f}s", secs(t0, t1),
                  secs(t1, t2), secs(t2, t3), secs(t0, clock::now())));
  (void)args;
  return report_violations(cfg, violations);
}

bool inputs_exist(const CommandArgs& args) {
  bool ok = true;
  auto check = [&](const std::string& role, const std::string& path) {
    if (!fs::exists(path)) {
      log(fmt::format("error: input {} not found: {}", role, path));
      ok = false;
    }
  };
  for (const auto& [role, path] : args.inputs) check(role, path);
  for (const auto& path : args.fragments) check("fragment", path);
  return ok;
}

}  // namespace

int run_command(const std::string& command, const RunConfig& cfg, const CommandArgs& args) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    log(fmt::format("error: unknown command '{}'", command));
    return exit_code::usage;
  }
  if (!inputs_exist(args)) return exit_code::missing_input;
  try {
    OutputSet out(resolve_output_dir(args.output_dir, cfg));
    if (command == "krige") return cmd_krige(cfg, args, out);
    if (command == "aggregate-temporal") return cmd_aggregate_temporal(cfg, args, out);
    if (command == "aggregate-areal") return cmd_aggregate_areal(cfg, args, out);
    if (command == "survey-weights") return cmd_survey(cfg, args, out, false);
    if (command == "survey-estimate") return cmd_survey(cfg, args, out, true);
    if (command == "gvf") return cmd_gvf(cfg, args, out);
    if (command == "panel-build") return cmd_panel_build(cfg, args, out);
    if (command == "validate") return cmd_validate(cfg, args, out);
    return cmd_demo(cfg, args, out);
  } catch (const Error& e) {
    log(fmt::format("error [{}]: {}", to_string(e.code()), e.what()));
    return e.code() == Errc::empty_input ? exit_code::usage : exit_code::runtime;
  } catch (const std::exception& e) {
    log(fmt::format("error: {}", e.what()));
    return exit_code::runtime;
  }
}

// ---- table adapters ---------------------------------------------------------

std::vector<GridFieldSnapshot> fields_from_table(const Table& t) {
  const auto c_x = t.column("x"), c_y = t.column("y"), c_v = t.column("value");
  const auto c_var = t.find_column("variable"), c_year = t.find_column("year"), c_sector = t.find_column("sector");
  std::map<std::tuple<std::string, int, std::string>, std::vector<Sample>> groups;
  for (const auto& r : t.rows) {
    const auto v = parse_optional_number(r[c_v]);
    if (!v) continue;
    groups[{c_var ? r[*c_var] : "value", c_year ? parse_int(r[*c_year]) : 0, c_sector ? r[*c_sector] : ""}].push_back(
        {{parse_number(r[c_x]), parse_number(r[c_y])}, *v});
  }
  std::vector<GridFieldSnapshot> out;
  for (auto& [key, samples] : groups) {
    const auto& [var, year, sector] = key;
    out.push_back(GridFieldSnapshot::make(var, year, sector.empty() ? std::nullopt : std::optional(sector),
                                          std::move(samples)));
  }
  if (out.empty()) throw Error(Errc::empty_input, "field table has no values");
  return out;
}

Table fields_to_table(const std::vector<GridFieldSnapshot>& fields) {
  Table t{{"variable", "year", "sector", "x", "y", "value"}, {}};
  for (const auto& f : fields) {
    for (const auto& s : f.samples) {
      t.rows.push_back({f.variable, std::to_string(f.year), f.sector.value_or(""), format_number(s.location.x),
                        format_number(s.location.y), format_number(s.value)});
    }
  }
  return t;
}

Table predictions_table(const std::vector<std::pair<const GridFieldSnapshot*, AlignmentResult>>& results) {
  Table t{{"variable", "year", "sector", "area_id", "family", "nmax", "n_used", "mean", "variance", "cv_rmse", "error"},
          {}};
  for (const auto& [f, r] : results) {
    for (const auto& p : r.predictions) {
      t.rows.push_back({f->variable, std::to_string(f->year), f->sector.value_or(""), p.area_id, p.family,
                        std::to_string(p.nmax), std::to_string(p.n_used), p.error ? "NA" : format_number(p.mean),
                        p.error ? "NA" : format_number(p.variance), format_number(p.cv_rmse), p.error.value_or("")});
    }
  }
  return t;
}

Table cv_table(const std::vector<std::pair<const GridFieldSnapshot*, AlignmentResult>>& results) {
  Table t{{"variable", "year", "sector", "stage", "candidate", "rmse"}, {}};
  for (const auto& [f, r] : results) {
    for (const auto& e : r.cv_table) {
      t.rows.push_back({f->variable, std::to_string(f->year), f->sector.value_or(""), e.stage, e.candidate,
                        std::isfinite(e.rmse) ? format_number(e.rmse) : "Inf"});
    }
  }
  return t;
}

Crosswalk crosswalk_from_table(const Table& t) {
  // Named columns when present, otherwise the two columns in order.
  const bool named = t.find_column("municipality") && t.find_column("area");
  if (!named && t.header.size() != 2) throw Error(Errc::parse, "crosswalk needs municipality and area columns");
  const auto c_m = named ? t.column("municipality") : 0, c_a = named ? t.column("area") : 1;
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& r : t.rows) entries.emplace_back(r[c_m], r[c_a]);
  return Crosswalk(entries);
}

std::vector<CensusRecord> census_from_table(const Table& t) {
  const auto c_m = t.column("municipality"), c_s = t.column("size"), c_t = t.column("spec"), c_y = t.column("year"),
             c_n = t.column("farms");
  std::vector<CensusRecord> out;
  for (const auto& r : t.rows) {
    out.push_back({r[c_m], parse_size_class(r[c_s]), parse_spec_class(r[c_t]), parse_int(r[c_y]), parse_number(r[c_n])});
  }
  return out;
}

std::vector<FarmRecord> farms_from_table(const Table& t) {
  const auto c_id = t.column("farm_id"), c_a = t.column("area"), c_s = t.column("size"), c_t = t.column("spec"),
             c_y = t.column("year");
  std::vector<std::size_t> value_cols;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (i != c_id && i != c_a && i != c_s && i != c_t && i != c_y) value_cols.push_back(i);
  }
  std::vector<FarmRecord> out;
  for (const auto& r : t.rows) {
    FarmRecord f{r[c_id], r[c_a], parse_size_class(r[c_s]), parse_spec_class(r[c_t]), parse_int(r[c_y]), {}};
    for (auto i : value_cols) {
      if (auto v = parse_optional_number(r[i])) f.values[t.header[i]] = *v;
    }
    out.push_back(std::move(f));
  }
  return out;
}

Table weights_table(const std::vector<DomainWeights>& weights) {
  Table t{{"area", "year", "size", "spec", "weight", "method", "donor_year"}, {}};
  for (const auto& w : weights) {
    for (const auto& r : w.records) {
      t.rows.push_back({r.area, std::to_string(r.year), std::string(to_string(r.size)), std::string(to_string(r.spec)),
                        format_number(r.weight), std::string(to_string(r.method)),
                        w.donor_year ? std::to_string(*w.donor_year) : ""});
    }
  }
  return t;
}

Table estimates_table(const std::vector<DomainEstimate>& estimates) {
  Table t{{"area", "year", "variable", "total", "mean", "var_total_direct", "var_mean_direct", "n", "N",
           "low_support", "method"},
          {}};
  for (const auto& e : estimates) {
    auto num = [&](double v) { return e.missing ? std::string("NA") : format_number(v); };
    t.rows.push_back({e.area, std::to_string(e.year), e.variable, num(e.total), num(e.mean), num(e.var_total),
                      num(e.var_mean), std::to_string(e.n), format_number(e.population), e.low_support ? "1" : "0",
                      e.missing ? "missing" : std::string(to_string(e.method))});
  }
  return t;
}

std::vector<DomainEstimate> estimates_from_table(const Table& t) {
  const auto c_a = t.column("area"), c_y = t.column("year"), c_v = t.column("variable"), c_t = t.column("total"),
             c_m = t.column("mean"), c_vt = t.column("var_total_direct"), c_vm = t.column("var_mean_direct"),
             c_n = t.column("n"), c_N = t.column("N");
  const auto c_low = t.find_column("low_support"), c_method = t.find_column("method");
  std::vector<DomainEstimate> out;
  for (const auto& r : t.rows) {
    DomainEstimate e;
    e.area = r[c_a];
    e.year = parse_int(r[c_y]);
    e.variable = r[c_v];
    e.n = parse_int(r[c_n]);
    e.population = parse_number(r[c_N]);
    const auto total = parse_optional_number(r[c_t]);
    e.missing = !total;
    if (total) {
      e.total = *total;
      e.mean = parse_number(r[c_m]);
      e.var_total = parse_number(r[c_vt]);
      e.var_mean = parse_number(r[c_vm]);
    }
    if (c_low) e.low_support = r[*c_low] == "true" || r[*c_low] == "1";
    if (c_method && r[*c_method] != "missing" && !r[*c_method].empty()) e.method = parse_weight_method(r[*c_method]);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<GvfRun> run_gvf(const std::vector<DomainEstimate>& estimates, double tau) {
  std::map<std::string, std::vector<const DomainEstimate*>> by_var;
  for (const auto& e : estimates) {
    if (!e.missing) by_var[e.variable].push_back(&e);
  }
  std::vector<GvfRun> runs;
  for (const auto& [var, list] : by_var) {
    std::vector<GvfDomain> domains;
    GvfRun run;
    run.variable = var;
    for (const auto* e : list) {
      domains.push_back({e->area, e->year, e->total, e->var_total, e->n, e->population});
      run.population.push_back(e->population);
    }
    run.result = regularize_variances(domains, tau);
    runs.push_back(std::move(run));
  }
  return runs;
}

Table gvf_variance_table(const std::vector<GvfRun>& runs) {
  Table t{{"variable", "area", "year", "n", "var_direct", "var_gvf", "var_final", "blend_weight", "var_mean_final",
           "degenerate"},
          {}};
  for (const auto& run : runs) {
    for (std::size_t i = 0; i < run.result.rows.size(); ++i) {
      const auto& r = run.result.rows[i];
      const double N = run.population[i];
      t.rows.push_back({run.variable, r.area, std::to_string(r.year), std::to_string(r.n), format_number(r.var_direct),
                        format_number(r.var_gvf), format_number(r.var_final), format_number(r.weight),
                        format_number(r.var_final / (N * N)), r.degenerate ? "1" : "0"});
    }
  }
  return t;
}

Table gvf_candidate_table(const std::vector<GvfRun>& runs) {
  Table t{{"variable", "response", "precision", "available", "alpha", "beta", "gamma1", "gamma2", "n_fit", "rmse_log",
           "reduction_upper", "increase_share", "chosen", "reason"},
          {}};
  for (const auto& run : runs) {
    for (const auto& c : run.result.candidates) {
      const bool chosen = run.result.chosen && c.model && run.result.chosen->name() == c.model->name();
      if (c.model) {
        const auto& m = *c.model;
        t.rows.push_back({run.variable, to_string(c.response), to_string(c.precision), "1", format_number(m.alpha),
                          format_number(m.beta), format_number(m.gamma1), format_number(m.gamma2),
                          std::to_string(m.n_fit), format_number(m.metrics.rmse_log),
                          format_number(m.metrics.reduction_upper), format_number(m.metrics.increase_share),
                          chosen ? "1" : "0", ""});
      } else {
        t.rows.push_back({run.variable, to_string(c.response), to_string(c.precision), "0", "NA", "NA", "NA", "NA", "0",
                          "NA", "NA", "NA", "0", c.reason});
      }
    }
  }
  return t;
}

Fragment fragment_from_table(const Table& t, const std::string& default_source) {
  const auto c_a = t.column("area"), c_y = t.column("year"), c_v = t.column("variable"), c_val = t.column("value");
  const auto c_src = t.find_column("source");
  std::string source = default_source;
  Fragment f;
  for (const auto& r : t.rows) {
    if (c_src) {
      if (&r == &t.rows.front()) source = r[*c_src];
      else if (r[*c_src] != source) throw Error(Errc::parse, "fragment table mixes sources");
    }
    f.cells.push_back({r[c_a], parse_int(r[c_y]), r[c_v], parse_optional_number(r[c_val]), source});
  }
  f.source = source;
  return f;
}

Table panel_wide_table(const Panel& p) {
  Table t;
  t.header = {"area", "year"};
  for (const auto& c : p.columns) t.header.push_back(c.variable);
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    std::vector<std::string> row{p.rows[i].first, std::to_string(p.rows[i].second)};
    for (const auto& v : p.values[i]) row.push_back(format_number(v));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table panel_long_table(const Panel& p) {
  Table t{{"area", "year", "variable", "value", "source"}, {}};
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    for (std::size_t j = 0; j < p.columns.size(); ++j) {
      t.rows.push_back({p.rows[i].first, std::to_string(p.rows[i].second), p.columns[j].variable,
                        format_number(p.values[i][j]), p.columns[j].source});
    }
  }
  return t;
}

Panel panel_from_long_table(const Table& t) {
  const auto c_a = t.column("area"), c_y = t.column("year"), c_v = t.column("variable"), c_val = t.column("value");
  const auto c_src = t.find_column("source");
  std::map<std::string, Fragment> by_source;
  for (const auto& r : t.rows) {
    const std::string src = c_src ? r[*c_src] : "panel";
    auto& f = by_source[src];
    f.source = src;
    f.cells.push_back({r[c_a], parse_int(r[c_y]), r[c_v], parse_optional_number(r[c_val]), src});
  }
  std::vector<Fragment> fragments;
  for (auto& [_, f] : by_source) fragments.push_back(std::move(f));
  return assemble(fragments);
}

Table missing_table(const std::vector<MissingRow>& rows) {
  Table t{{"source", "variable", "year", "covered", "missing"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.source, r.variable, std::to_string(r.year), std::to_string(r.covered), std::to_string(r.missing)});
  }
  return t;
}

Table violations_table(const std::vector<Violation>& v) {
  Table t{{"rule", "variable", "area", "year", "value", "message"}, {}};
  for (const auto& x : v) {
    t.rows.push_back({x.rule, x.variable, x.area, x.area.empty() ? "" : std::to_string(x.year), format_number(x.value),
                      x.message});
  }
  return t;
}

}  // namespace harmonia
