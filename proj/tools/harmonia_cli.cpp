// harmonia command-line entry point.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "harmonia/config.hpp"
#include "harmonia/error.hpp"
#include "harmonia/pipeline.hpp"

using namespace harmonia;

namespace {

std::vector<int> parse_years(const std::string& text) {
  std::vector<int> years;
  if (text.empty()) return years;
  if (auto dash = text.find('-'); dash != std::string::npos) {
    const int a = parse_int(text.substr(0, dash)), b = parse_int(text.substr(dash + 1));
    if (b < a) throw Error(Errc::parse, "empty year range '" + text + "'");
    for (int y = a; y <= b; ++y) years.push_back(y);
    return years;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    years.push_back(parse_int(text.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return years;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harmonisation of gridded, areal and survey inputs into an area x year panel"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the command

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> threads;
  std::optional<std::string> wd;
  bool strict = false;
  app.add_option("-c,--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "master seed");
  app.add_option("-o,--out", out_dir, "output directory (overrides HARMONIA_OUT and the config)");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--wd-convention", wd, "wind direction formula: printed or meteorological");
  app.add_flag("--strict", strict, "treat validation violations as errors");

  CommandArgs args;
  std::string years_text;
  auto input = [&](CLI::App* sub, const std::string& role, const std::string& help, bool req) {
    // Presence is checked after the config file's inputs are merged in.
    sub->add_option("--" + role, args.inputs[role], req ? help + " (required)" : help);
  };

  auto* krige = app.add_subcommand("krige", "block kriging of gridded fields onto areas");
  input(krige, "field", "CSV with x, y, value [, variable, year, sector]", true);
  input(krige, "areas", "GeoJSON area polygons", true);
  krige->add_option("--id-property", args.id_property, "GeoJSON property holding the area id");

  auto* temporal = app.add_subcommand("aggregate-temporal", "annual and seasonal summaries of cell series");
  input(temporal, "input", "CSV with cell_id, x, y, time, variable, value", true);

  auto* areal = app.add_subcommand("aggregate-areal", "municipal, land-cover and elevation aggregation");
  input(areal, "municipal", "CSV with municipality, year, variable, value", false);
  input(areal, "crosswalk", "CSV with municipality, area", false);
  input(areal, "landcover", "CSV with x, y, code, snapshot_year", false);
  input(areal, "elevation", "CSV with x, y, elevation", false);
  input(areal, "areas", "GeoJSON area polygons", false);
  areal->add_option("--method", args.method, "sum or mean")->check(CLI::IsMember({"sum", "mean"}));
  areal->add_option("--cell-size", args.cell_size, "land-cover cell side length");
  areal->add_option("--schedule", args.schedule, "corine or gdlc")->check(CLI::IsMember({"corine", "gdlc"}));
  areal->add_option("--reclass", args.reclass, "corine or none")->check(CLI::IsMember({"corine", "none"}));
  areal->add_option("--years", years_text, "target years, e.g. 2011-2024");
  areal->add_option("--id-property", args.id_property, "GeoJSON property holding the area id");

  auto* weights = app.add_subcommand("survey-weights", "calibrated survey weights");
  auto* estimate = app.add_subcommand("survey-estimate", "Horvitz-Thompson domain estimates");
  for (auto* sub : {weights, estimate}) {
    input(sub, "census", "CSV with municipality, size, spec, year, farms", true);
    input(sub, "farms", "CSV with farm_id, area, size, spec, year and value columns", true);
    input(sub, "crosswalk", "CSV with municipality, area", true);
    sub->add_option("--years", years_text, "extra domain years");
  }

  auto* gvf = app.add_subcommand("gvf", "generalized variance function smoothing");
  input(gvf, "estimates", "estimates.csv from survey-estimate", true);

  auto* panel = app.add_subcommand("panel-build", "full join of long-format fragments");
  panel->add_option("--fragment", args.fragments, "CSV with area, year, variable, value [, source]");
  input(panel, "areas", "GeoJSON defining the row universe", false);
  panel->add_option("--years", years_text, "universe years, e.g. 2011-2024");
  panel->add_option("--id-property", args.id_property, "GeoJSON property holding the area id");

  auto* validate = app.add_subcommand("validate", "plausibility checks on a long-format panel");
  input(validate, "panel", "panel_long.csv", true);
  input(validate, "fidelity", "CSV with variable, predicted, observed", false);

  app.add_subcommand("demo", "synthetic end-to-end run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code::usage;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) {
      if (!std::filesystem::exists(config_path)) {
        fmt::print(stderr, "harmonia: error: config not found: {}\n", config_path);
        return exit_code::missing_input;
      }
      cfg = load_config(config_path);
    }
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (wd) cfg.wd_convention = parse_wind_convention(*wd);
    if (strict) cfg.strict = true;
    cfg.validate();
    args.years = parse_years(years_text);
  } catch (const Error& e) {
    fmt::print(stderr, "harmonia: config error [{}]: {}\n", to_string(e.code()), e.what());
    return exit_code::config;
  }
  args.output_dir = out_dir;

  // Unset optional inputs must not count as given.
  for (auto it = args.inputs.begin(); it != args.inputs.end();) {
    it = it->second.empty() ? args.inputs.erase(it) : std::next(it);
  }
  for (const auto& [role, path] : cfg.inputs) args.inputs.try_emplace(role, path);

  return run_command(app.get_subcommands().front()->get_name(), cfg, args);
}
