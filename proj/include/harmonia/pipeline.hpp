#pragma once

// Command implementations behind the CLI. Each command reads its inputs,
// writes delimited tables plus manifest.json into the output directory and
// returns a process exit code.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "harmonia/config.hpp"
#include "harmonia/geom.hpp"
#include "harmonia/gvf.hpp"
#include "harmonia/panel.hpp"
#include "harmonia/survey.hpp"
#include "harmonia/table.hpp"
#include "harmonia/tuning.hpp"

namespace harmonia {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 2;
inline constexpr int config = 3;
inline constexpr int missing_input = 4;
inline constexpr int runtime = 5;
inline constexpr int validation = 6;
}  // namespace exit_code

inline constexpr const char* kOutputDirEnv = "HARMONIA_OUT";

struct CommandArgs {
  std::map<std::string, std::string> inputs;  // role -> path
  std::vector<std::string> fragments;
  std::string method = "sum";
  double cell_size = 0.0;
  std::string id_property = "id";
  std::string schedule = "corine";  // land-cover snapshot schedule
  std::string reclass = "corine";   // land-cover legend: corine or none
  std::vector<int> years;  // panel universe years
  std::optional<std::string> output_dir;
};

const std::vector<std::string>& command_names();

/// Flag, then the environment override, then the configuration.
std::string resolve_output_dir(const std::optional<std::string>& flag, const RunConfig& cfg);

/// Runs one command; diagnostics go to stderr.
int run_command(const std::string& command, const RunConfig& cfg, const CommandArgs& args);

// Table adapters shared by the commands, the demo and the tests.

/// Columns x, y, value and optionally variable, year, sector. One field per
/// (variable, year, sector) group, in sorted order.
std::vector<GridFieldSnapshot> fields_from_table(const Table& t);
Table fields_to_table(const std::vector<GridFieldSnapshot>& fields);

Table predictions_table(const std::vector<std::pair<const GridFieldSnapshot*, AlignmentResult>>& results);
Table cv_table(const std::vector<std::pair<const GridFieldSnapshot*, AlignmentResult>>& results);

Crosswalk crosswalk_from_table(const Table& t);
std::vector<CensusRecord> census_from_table(const Table& t);
std::vector<FarmRecord> farms_from_table(const Table& t);
Table weights_table(const std::vector<DomainWeights>& weights);
Table estimates_table(const std::vector<DomainEstimate>& estimates);
std::vector<DomainEstimate> estimates_from_table(const Table& t);

struct GvfRun {
  std::string variable;
  GvfResult result;
  std::vector<double> population;  // N per row, aligned with result.rows
};
std::vector<GvfRun> run_gvf(const std::vector<DomainEstimate>& estimates, double tau);
Table gvf_variance_table(const std::vector<GvfRun>& runs);
Table gvf_candidate_table(const std::vector<GvfRun>& runs);

/// Columns area, year, variable, value and optionally source (default
/// `default_source`).
Fragment fragment_from_table(const Table& t, const std::string& default_source);
Table panel_wide_table(const Panel& p);
Table panel_long_table(const Panel& p);
Panel panel_from_long_table(const Table& t);
Table missing_table(const std::vector<MissingRow>& rows);
Table violations_table(const std::vector<Violation>& v);

/// Fingerprint of file contents, 16 hex digits.
std::string content_hash(std::string_view content);

}  // namespace harmonia
