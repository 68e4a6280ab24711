#pragma once

// Non-geostatistical harmonisation: municipal crosswalk aggregation, land
// cover reclassification and area shares, elevation bands and the
// piecewise-constant expansion of land cover snapshots.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "harmonia/geom.hpp"

namespace harmonia {

enum class AggregationMethod { sum, mean };

AggregationMethod parse_aggregation(const std::string& name);

/// One value per record; repeated municipality ids are allowed and combine.
using MunicipalValue = std::pair<std::string, std::optional<double>>;

/// Per-area sum or unweighted mean of non-missing municipal values. Every
/// area of the crosswalk appears in the result; areas without contributions
/// are nullopt. Throws unmapped-unit listing municipalities absent from xwalk.
std::map<std::string, std::optional<double>> aggregate_crosswalk(const std::vector<MunicipalValue>& values,
                                                                 const Crosswalk& xwalk, AggregationMethod method);

/// Harmonised nine-category land cover legend.
enum class LandCover {
  urban = 1,
  arable_land,
  permanent_crops,
  pastures,
  heterogeneous_agriculture,
  forests,
  grass_scrub_open,
  wetlands,
  water,
};

std::string_view land_cover_name(int code);

class ReclassTable {
 public:
  ReclassTable() = default;
  /// Throws unmapped-class if an original code is listed twice.
  explicit ReclassTable(const std::vector<std::pair<int, int>>& entries);

  int map(int code) const;  // throws unmapped-class
  bool contains(int code) const { return entries_.contains(code); }
  const std::map<int, int>& entries() const noexcept { return entries_; }

  /// CORINE level-3 codes onto the nine harmonised categories.
  static ReclassTable corine();

 private:
  std::map<int, int> entries_;
};

struct ClassCell {
  Point location;  // cell centre
  int code = 0;
};

std::vector<ClassCell> reclassify(const std::vector<ClassCell>& cells, const ReclassTable& table);

/// share = 100 * count * cell_area / area_total per class. Throws
/// coverage-overflow when the classified area exceeds the total by > 1e-6.
std::map<int, double> area_shares(const std::map<int, std::size_t>& class_counts, double cell_area,
                                  double area_total);

struct ElevationShares {
  double plain = 0.0;     // <= low
  double hill = 0.0;      // (low, high]
  double mountain = 0.0;  // > high
};

ElevationShares elevation_band_shares(const std::vector<double>& dem_values, double low = 200.0,
                                      double high = 600.0);

/// Counts of cells per area, assigned by cell centre (no partial cells).
/// Cells falling in no area are ignored. Output keyed by area id.
std::map<std::string, std::map<int, std::size_t>> tally_cells(const std::vector<ClassCell>& cells,
                                                              const std::vector<AreaUnit>& areas);

struct SnapshotRange {
  int snapshot_year = 0;
  int first_year = 0;
  int last_year = 0;
};

class SnapshotSchedule {
 public:
  /// Throws domain when ranges overlap or are inverted.
  explicit SnapshotSchedule(std::vector<SnapshotRange> ranges);

  /// Snapshot applicable to target_year; throws schedule-gap if uncovered.
  int snapshot_for(int target_year) const;
  const std::vector<SnapshotRange>& ranges() const noexcept { return ranges_; }

  static SnapshotSchedule corine();  // 2012 -> 2011..2017, 2018 -> 2018..2024
  static SnapshotSchedule gdlc();    // 2015 -> 2011..2015, 2016..2018 own, 2019 -> 2019..2024

 private:
  std::vector<SnapshotRange> ranges_;
};

int expand_piecewise(const SnapshotSchedule& schedule, int target_year);

}  // namespace harmonia
