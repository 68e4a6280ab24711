#pragma once

// Run-wide configuration read from one JSON document. Every field has a
// default; command-line flags override file values.

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "harmonia/temporal.hpp"
#include "harmonia/tuning.hpp"

namespace harmonia {

struct Tolerances {
  double rake_tol = 1e-8;
  int rake_max_iter = 1000;
  double gvf_tau = 0.05;
  double share_tol = 1e-6;
  double fidelity_threshold = 0.9;
};

struct RunConfig {
  std::uint64_t seed = 20110101;
  std::string output_dir = "out";
  std::map<std::string, std::string> inputs;  // role -> path
  TuningConfig tuning;
  Tolerances tolerances;
  std::string season_rule = "december-own-year";
  MagnusConstants magnus;
  WindConvention wd_convention = WindConvention::printed;
  std::size_t threads = 1;
  bool strict = false;
  std::string coordinate_unit = "as supplied (planar Euclidean distances)";

  void validate() const;  // throws domain
};

RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);  // throws io, parse, domain

/// Canonical form with a citation string next to each published constant.
nlohmann::json config_to_json(const RunConfig& cfg);

}  // namespace harmonia
