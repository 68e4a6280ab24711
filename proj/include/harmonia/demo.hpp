#pragma once

// Deterministic synthetic inputs for the end-to-end demo: a 16 x 16 layout
// of square areas, a 20 x 20 climate grid with daily series, municipal
// livestock counts, census benchmarks and a farm sample.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "harmonia/geom.hpp"
#include "harmonia/survey.hpp"
#include "harmonia/temporal.hpp"

namespace harmonia {

struct MunicipalRecord {
  std::string municipality;
  int year = 0;
  std::string variable;
  std::optional<double> value;
};

struct DemoData {
  std::uint64_t seed = 0;
  std::vector<int> years;
  std::vector<AreaUnit> areas;
  std::vector<std::pair<std::string, std::string>> crosswalk;  // municipality -> area
  std::vector<std::string> cell_ids;
  std::vector<Point> cells;
  double cell_size = 0.0;
  std::vector<MunicipalRecord> livestock;
  std::vector<CensusRecord> census;
  std::vector<FarmRecord> farms;

  /// Daily t2m, d2m (K) and tp (m) for one cell over all demo years. Drawn
  /// from the cell's own sub-stream, so cells can be generated in any order.
  std::vector<LongRecord> cell_series(std::size_t cell) const;
};

DemoData make_demo_data(std::uint64_t seed);

/// Smooth elevation surface (m) shared by the climate generator.
double demo_elevation(const Point& p) noexcept;

}  // namespace harmonia
