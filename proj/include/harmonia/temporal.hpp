#pragma once

// Unit conversions, derived meteorological variables and annual / seasonal
// summaries of high-frequency gridded series.

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace harmonia {

enum class UnitRule { identity, kelvin_to_celsius, metres_to_millimetres };

UnitRule parse_unit_rule(std::string_view name);
std::string_view to_string(UnitRule rule) noexcept;
double convert_unit(double value, UnitRule rule) noexcept;

double wind_speed(double u, double v) noexcept;

/// `printed` evaluates 180 - atan2(u/ws, v/ws) * 180/pi literally;
/// `meteorological` is the usual "blowing from" form 180 + atan2(u, v) * 180/pi.
enum class WindConvention { printed, meteorological };

WindConvention parse_wind_convention(std::string_view name);

/// Degrees in [0, 360); nullopt for a calm (zero) wind vector.
std::optional<double> wind_direction(double u, double v, WindConvention convention = WindConvention::printed);

struct MagnusConstants {
  double a = 17.625;
  double b = 243.04;  // degrees Celsius
};

/// Relative humidity (percent) from air and dew-point temperature in Celsius,
/// clamped to (0, 100]. Throws domain when either temperature is at or below
/// -b, or when the dew point exceeds the air temperature by more than 0.5.
double relative_humidity(double t2m, double d2m, const MagnusConstants& magnus = {});

struct Timestamp {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;

  auto operator<=>(const Timestamp&) const = default;
};

/// Accepts "YYYY-MM-DD", "YYYY-MM-DD HH:MM[:SS]" and "YYYY-MM-DDTHH:MM[:SS][Z]".
Timestamp parse_timestamp(std::string_view text);
std::string to_string(const Timestamp& ts);

enum class Season { winter, spring, summer, fall };

std::string_view to_string(Season season) noexcept;

/// December belongs to the winter of its own calendar year, so seasons
/// partition each calendar year.
struct SeasonYear {
  Season season;
  int year;
  friend bool operator==(const SeasonYear&, const SeasonYear&) = default;
};
SeasonYear assign_season(const Timestamp& ts) noexcept;

struct SummaryStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double sd = 0.0;  // sample (n-1) standard deviation; 0 when count == 1
  double sum = 0.0;
  std::size_t count = 0;
  bool single_observation = false;
};

/// Streaming (Welford) summary. Throws empty-input for no values.
SummaryStats summarize_values(std::span<const double> values);

struct Observation {
  Timestamp time;
  std::optional<double> value;  // nullopt = missing
};

struct TimedSeries {
  std::string variable;
  std::string cell_id;
  std::vector<Observation> observations;  // strictly increasing times
};

enum class Window { annual, seasonal };

struct WindowKey {
  int year = 0;
  std::optional<Season> season;  // empty for annual windows
  auto operator<=>(const WindowKey&) const = default;
};

/// Statistics per window over non-missing observations. A window containing
/// only missing observations maps to nullopt. Throws domain if the
/// observation times are not strictly increasing.
std::map<WindowKey, std::optional<SummaryStats>> summarize(const TimedSeries& series, Window window);

/// Physical plausibility of a summarised value: non-negative precipitation and
/// runoff (tp, sf, ro, sro, ssro), relative humidity in (0, 100].
std::optional<std::string> physical_violation(std::string_view variable, double value);

// Long-format table processing.

struct LongRecord {
  std::string cell_id;
  double x = 0.0;
  double y = 0.0;
  Timestamp time;
  std::string variable;
  std::optional<double> value;
};

struct SummaryRow {
  std::string cell_id;
  double x = 0.0;
  double y = 0.0;
  int year = 0;
  std::string period;  // "ANNUAL" or a season name
  std::string variable;
  std::string stat;
  std::optional<double> value;
};

struct TemporalConfig {
  std::map<std::string, UnitRule> units = default_unit_rules();
  WindConvention wind = WindConvention::printed;
  MagnusConstants magnus;
  std::vector<std::string> stats{"mean", "min", "max", "sd", "sum"};
  bool seasonal = true;

  static std::map<std::string, UnitRule> default_unit_rules();
};

/// Converts units, derives ws*/wd* from u*/v* pairs and rh from t2m/d2m at
/// each (cell, time), then summarises every (cell, variable) series. Rows are
/// ordered by cell_id, year, period (ANNUAL, then seasons from winter to
/// fall), variable, and the configured stat order.
std::vector<SummaryRow> aggregate_temporal(const std::vector<LongRecord>& records, const TemporalConfig& cfg);

}  // namespace harmonia
