#pragma once

// Census-based post-stratification of a farm survey and Horvitz-Thompson
// domain estimation. Strata are economic size (small, large) crossed with
// specialisation (crop, livestock, mixed) inside each (area, year) domain.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "harmonia/geom.hpp"

namespace harmonia {

enum class SizeClass { small = 0, large = 1 };
enum class SpecClass { crop = 0, livestock = 1, mixed = 2 };

inline constexpr double kSurveyFloorStandardOutput = 8000.0;     // euro
inline constexpr double kLargeFarmStandardOutput = 100000.0;     // euro

/// nullopt below the survey floor; small below the large-farm threshold.
std::optional<SizeClass> size_class_from_standard_output(double standard_output);

SizeClass parse_size_class(const std::string& text);
SpecClass parse_spec_class(const std::string& text);
std::string_view to_string(SizeClass s) noexcept;
std::string_view to_string(SpecClass t) noexcept;

using StratumGrid = std::array<std::array<double, 3>, 2>;  // [size][spec]
using CountGrid = std::array<std::array<int, 3>, 2>;

double grid_total(const StratumGrid& g) noexcept;
int grid_total(const CountGrid& g) noexcept;
std::array<double, 2> row_margins(const StratumGrid& g) noexcept;
std::array<double, 3> col_margins(const StratumGrid& g) noexcept;

/// Population (N) and sample (n) counts of one (area, year) domain.
struct StratumTable {
  StratumGrid population{};
  CountGrid sample{};

  double population_total() const noexcept { return grid_total(population); }
  int sample_total() const noexcept { return grid_total(sample); }
};

struct StratumCount {
  std::string area;
  SizeClass size = SizeClass::small;
  SpecClass spec = SpecClass::crop;
  int year = 0;
  double population = 0.0;
  int sample = 0;
};

/// Linear between the 2010 and 2020 benchmarks for 2011-2019, held at the
/// 2020 level for 2020-2023, floored at zero. Throws domain outside 2011-2023.
double interpolate_population(double n2010, double n2020, int year);

/// Stratum populations for `year`: the interpolated total spread with the
/// composition of the nearer census (ties go to 2020).
StratumGrid reconstruct_population(const StratumGrid& census2010, const StratumGrid& census2020, int year);

enum class WeightMethod { cell, rake2d, rake1d_size, rake1d_spec, donor, uniform };

std::string_view to_string(WeightMethod m) noexcept;
WeightMethod parse_weight_method(std::string_view text);  // throws parse

struct RakeResult {
  StratumGrid weights{};  // meaningful where n > 0, zero elsewhere
  int iterations = 0;
  double residual = 0.0;
};

/// Iterative proportional fitting from unit weights. Throws margin-mismatch,
/// infeasible-support or rake-divergence.
RakeResult rake_2d(const CountGrid& n, const std::array<double, 2>& size_margins,
                   const std::array<double, 3>& spec_margins, double tol = 1e-8, int max_iter = 1000);

enum class Axis { size, spec };

/// Ratio weights margin / slice sample count along one axis. Throws
/// infeasible-support if a positive margin has no sample or vice versa.
StratumGrid calibrate_axis(const CountGrid& n, std::span<const double> margins, Axis axis);

struct Calibration1d {
  StratumGrid weights{};
  Axis axis = Axis::size;
  double max_deviation = 0.0;  // max |w n - N| over all strata
};

/// Tries both axes; picks the one whose weighted counts deviate least (max
/// absolute) from the full population table, size first on ties. nullopt
/// when neither axis is feasible.
std::optional<Calibration1d> calibrate_1d(const CountGrid& n, const StratumGrid& population);

struct WeightRecord {
  std::string area;
  int year = 0;
  SizeClass size = SizeClass::small;
  SpecClass spec = SpecClass::crop;
  double weight = 0.0;
  WeightMethod method = WeightMethod::cell;
};

struct DomainWeights {
  std::string area;
  int year = 0;
  bool missing = false;  // no sampled farm in the domain
  WeightMethod method = WeightMethod::uniform;
  std::optional<int> donor_year;
  StratumGrid weights{};
  std::vector<WeightRecord> records;  // one per sampled stratum

  std::optional<double> weight(SizeClass s, SpecClass t) const;
};

struct WeightOptions {
  double rake_tol = 1e-8;
  int rake_max_iter = 1000;
};

/// Weighting hierarchy: cell, 2-D raking, 1-D calibration, temporal donor,
/// uniform. `history` holds the same area's tables for other years.
DomainWeights build_weights(const std::string& area, int year, const StratumTable& table,
                            const std::map<int, StratumTable>& history, const WeightOptions& options = {});

struct StratumValue {
  SizeClass size = SizeClass::small;
  SpecClass spec = SpecClass::crop;
  double value = 0.0;
};

struct PointEstimate {
  double total = 0.0;
  double mean = 0.0;
};

/// T = sum w X, mean = T / N_dy. Throws unweighted-observation when a value
/// falls in a stratum without a weight.
PointEstimate ht_estimate(const DomainWeights& weights, std::span<const StratumValue> values, double population);

struct DesignVariance {
  double var_total = 0.0;
  double var_mean = 0.0;
  bool low_support = false;  // some stratum had a single observation
};

/// Stratified variance with finite-population correction,
/// sum N^2 (1 - n/N) S^2 / n, using N from the table and n, S^2 from values.
DesignVariance design_variance(const StratumTable& table, std::span<const StratumValue> values);

// Table-level pipeline.

struct CensusRecord {
  std::string municipality;
  SizeClass size = SizeClass::small;
  SpecClass spec = SpecClass::crop;
  int year = 0;  // 2010 or 2020
  double farms = 0.0;
};

struct FarmRecord {
  std::string farm_id;
  std::string area;
  SizeClass size = SizeClass::small;
  SpecClass spec = SpecClass::crop;
  int year = 0;
  std::map<std::string, double> values;  // absent key = missing
};

struct DomainEstimate {
  std::string area;
  int year = 0;
  std::string variable;
  bool missing = false;
  double total = 0.0;
  double mean = 0.0;
  double var_total = 0.0;
  double var_mean = 0.0;
  int n = 0;
  double population = 0.0;
  bool low_support = false;
  WeightMethod method = WeightMethod::uniform;
};

/// (area, year) -> stratum table, built from municipal census counts and the
/// farm sample for every year in `years`.
std::map<std::pair<std::string, int>, StratumTable> build_strata(const std::vector<CensusRecord>& census,
                                                                 const std::vector<FarmRecord>& farms,
                                                                 const Crosswalk& xwalk, const std::vector<int>& years);

std::vector<DomainWeights> build_all_weights(const std::map<std::pair<std::string, int>, StratumTable>& strata,
                                             const WeightOptions& options = {});

/// Estimates for every domain and variable, ordered by (area, year, variable).
std::vector<DomainEstimate> estimate_domains(const std::map<std::pair<std::string, int>, StratumTable>& strata,
                                             const std::vector<DomainWeights>& weights,
                                             const std::vector<FarmRecord>& farms,
                                             const std::vector<std::string>& variables);

}  // namespace harmonia
