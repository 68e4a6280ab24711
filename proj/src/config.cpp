#include "harmonia/config.hpp"

#include <cmath>

#include <fmt/format.h>

#include "harmonia/error.hpp"
#include "harmonia/table.hpp"

namespace harmonia {

using nlohmann::json;

void RunConfig::validate() const {
  tuning.validate();
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(Errc::domain, fmt::format("{} must be positive", name));
  };
  positive(tolerances.rake_tol, "rake_tol");
  positive(tolerances.gvf_tau, "gvf_tau");
  positive(tolerances.share_tol, "share_tol");
  positive(tolerances.fidelity_threshold, "fidelity_threshold");
  positive(magnus.a, "magnus.a");
  positive(magnus.b, "magnus.b");
  if (tolerances.rake_max_iter < 1) throw Error(Errc::domain, "rake_max_iter must be at least 1");
  if (season_rule != "december-own-year") {
    throw Error(Errc::domain, fmt::format("unsupported season_rule '{}'", season_rule));
  }
  if (threads < 1) throw Error(Errc::domain, "threads must be at least 1");
}

namespace {

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw Error(Errc::parse, fmt::format("unknown key '{}' in {}", it.key(), where));
  }
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  try {
    if (!j.is_object()) throw Error(Errc::parse, "configuration must be a JSON object");
    reject_unknown(j,
                   {"seed", "output_dir", "inputs", "tuning", "tolerances", "season_rule", "magnus", "wd_convention",
                    "threads", "strict", "coordinate_unit"},
                   "configuration");
    take(j, "seed", cfg.seed);
    take(j, "output_dir", cfg.output_dir);
    take(j, "inputs", cfg.inputs);
    take(j, "season_rule", cfg.season_rule);
    take(j, "threads", cfg.threads);
    take(j, "strict", cfg.strict);
    take(j, "coordinate_unit", cfg.coordinate_unit);
    if (j.contains("wd_convention")) cfg.wd_convention = parse_wind_convention(j.at("wd_convention").get<std::string>());
    if (j.contains("magnus")) {
      const auto& m = j.at("magnus");
      reject_unknown(m, {"a", "b"}, "magnus");
      take(m, "a", cfg.magnus.a);
      take(m, "b", cfg.magnus.b);
    }
    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      reject_unknown(t, {"rake_tol", "rake_max_iter", "gvf_tau", "share_tol", "fidelity_threshold"}, "tolerances");
      take(t, "rake_tol", cfg.tolerances.rake_tol);
      take(t, "rake_max_iter", cfg.tolerances.rake_max_iter);
      take(t, "gvf_tau", cfg.tolerances.gvf_tau);
      take(t, "share_tol", cfg.tolerances.share_tol);
      take(t, "fidelity_threshold", cfg.tolerances.fidelity_threshold);
    }
    cfg.tuning.seed = cfg.seed;
    if (j.contains("tuning")) {
      const auto& t = j.at("tuning");
      reject_unknown(t,
                     {"families", "nmax_grid", "folds", "repeats", "initial_nmax", "spacing", "refit_per_fold",
                      "n_lags", "cutoff_fraction"},
                     "tuning");
      if (t.contains("families")) {
        cfg.tuning.families.clear();
        for (const auto& f : t.at("families")) cfg.tuning.families.push_back(ModelFamily::parse(f.get<std::string>()));
      }
      take(t, "nmax_grid", cfg.tuning.nmax_grid);
      take(t, "folds", cfg.tuning.folds);
      take(t, "repeats", cfg.tuning.repeats);
      take(t, "initial_nmax", cfg.tuning.initial_nmax);
      take(t, "spacing", cfg.tuning.spacing);
      take(t, "refit_per_fold", cfg.tuning.refit_per_fold);
      take(t, "n_lags", cfg.tuning.n_lags);
      take(t, "cutoff_fraction", cfg.tuning.cutoff_fraction);
    }
    cfg.tuning.threads = cfg.threads;
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("configuration: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::parse, path + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["inputs"] = cfg.inputs;
  j["season_rule"] = {{"value", cfg.season_rule},
                      {"note", "December belongs to the winter of its own calendar year"}};
  j["threads"] = cfg.threads;
  j["strict"] = cfg.strict;
  j["coordinate_unit"] = cfg.coordinate_unit;
  j["wd_convention"] = cfg.wd_convention == WindConvention::printed ? "printed" : "meteorological";
  j["magnus"] = {{"a", cfg.magnus.a},
                 {"b", cfg.magnus.b},
                 {"citation", "Magnus approximation as used by the published methodology for relative humidity"}};
  json families = json::array();
  for (const auto& f : cfg.tuning.families) families.push_back(f.name());
  j["tuning"] = {{"families", families},
                 {"nmax_grid", cfg.tuning.nmax_grid},
                 {"folds", cfg.tuning.folds},
                 {"repeats", cfg.tuning.repeats},
                 {"initial_nmax", cfg.tuning.initial_nmax},
                 {"spacing", cfg.tuning.spacing},
                 {"refit_per_fold", cfg.tuning.refit_per_fold},
                 {"n_lags", cfg.tuning.n_lags},
                 {"cutoff_fraction", cfg.tuning.cutoff_fraction}};
  j["tolerances"] = {
      {"rake_tol", cfg.tolerances.rake_tol},
      {"rake_max_iter", cfg.tolerances.rake_max_iter},
      {"gvf_tau", {{"value", cfg.tolerances.gvf_tau},
                   {"citation", "RMSE tolerance band of the published GVF selection rule"}}},
      {"share_tol", cfg.tolerances.share_tol},
      {"fidelity_threshold", cfg.tolerances.fidelity_threshold}};
  j["constants"] = {
      {"survey_floor_standard_output",
       {{"value", 8000}, {"citation", "published survey field of observation (farms with at least 8000 EUR SO)"}}},
      {"large_farm_standard_output",
       {{"value", 100000}, {"citation", "published small/large size split at 100000 EUR SO"}}},
      {"gvf_blend_weights",
       {{"value", {{"n<=1", 1.0}, {"n=2", 0.5}, {"n>=3", 0.0}}},
        {"citation", "published sample-size blending rule"}}},
      {"gvf_increase_threshold", {{"value", 1.05}, {"citation", "published increase-share definition"}}},
      {"gvf_min_sample", {{"value", 3}, {"citation", "published GVF estimation sample (n >= 3)"}}},
      {"gvf_upper_quantile", {{"value", 0.75}, {"definition", "inclusive linear interpolation (type 7)"}}},
      {"elevation_bands_m", {{"value", {200, 600}}, {"citation", "published plain/hill/mountain split"}}},
      {"donor_quality_order", {"cell", "rake2d", "rake1d", "uniform"}},
      {"panel_years", {{"value", {2011, 2024}}, {"citation", "published panel span"}}}};
  return j;
}

}  // namespace harmonia
