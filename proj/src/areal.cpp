#include "harmonia/areal.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "harmonia/error.hpp"

namespace harmonia {

AggregationMethod parse_aggregation(const std::string& name) {
  if (name == "sum") return AggregationMethod::sum;
  if (name == "mean") return AggregationMethod::mean;
  throw Error(Errc::parse, "unknown aggregation method '" + name + "'");
}

std::map<std::string, std::optional<double>> aggregate_crosswalk(const std::vector<MunicipalValue>& values,
                                                                 const Crosswalk& xwalk, AggregationMethod method) {
  std::vector<std::string> unmapped;
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& [municipality, value] : values) {
    auto area = xwalk.area_of(municipality);
    if (!area) {
      unmapped.push_back(municipality);
      continue;
    }
    if (!value || !std::isfinite(*value)) continue;
    auto& [total, count] = acc[*area];
    total += *value;
    ++count;
  }
  if (!unmapped.empty()) {
    std::sort(unmapped.begin(), unmapped.end());
    unmapped.erase(std::unique(unmapped.begin(), unmapped.end()), unmapped.end());
    throw Error(Errc::unmapped_unit, fmt::format("municipalities not in crosswalk: {}", fmt::join(unmapped, ", ")));
  }
  std::map<std::string, std::optional<double>> out;
  for (const auto& area : xwalk.areas()) {
    auto it = acc.find(area);
    if (it == acc.end() || it->second.second == 0) {
      out[area] = std::nullopt;
    } else {
      const auto [total, count] = it->second;
      out[area] = method == AggregationMethod::sum ? total : total / static_cast<double>(count);
    }
  }
  return out;
}

std::string_view land_cover_name(int code) {
  switch (code) {
    case 1: return "Urban";
    case 2: return "Arable-Land";
    case 3: return "PermCrops";
    case 4: return "Pastures";
    case 5: return "HetAgro";
    case 6: return "Forests";
    case 7: return "GrassScrubOpenSpaceLilVeg";
    case 8: return "Wetlands";
    case 9: return "Water";
    default: return "Unknown";
  }
}

ReclassTable::ReclassTable(const std::vector<std::pair<int, int>>& entries) {
  for (const auto& [from, to] : entries) {
    auto [it, fresh] = entries_.emplace(from, to);
    if (!fresh && it->second != to) {
      throw Error(Errc::unmapped_class, fmt::format("class {} mapped to both {} and {}", from, it->second, to));
    }
  }
}

int ReclassTable::map(int code) const {
  auto it = entries_.find(code);
  if (it == entries_.end()) throw Error(Errc::unmapped_class, fmt::format("class {} has no harmonised mapping", code));
  return it->second;
}

ReclassTable ReclassTable::corine() {
  const std::vector<std::pair<LandCover, std::vector<int>>> groups{
      {LandCover::urban, {111, 112, 121, 122, 123, 124, 131, 132, 133, 141, 142}},
      {LandCover::arable_land, {211, 212, 213}},
      {LandCover::permanent_crops, {221, 222}},
      {LandCover::pastures, {223, 231}},
      {LandCover::heterogeneous_agriculture, {241, 242, 243, 244}},
      {LandCover::forests, {311, 312, 313}},
      {LandCover::grass_scrub_open, {321, 322, 323, 324, 331, 332, 333, 334, 335}},
      {LandCover::wetlands, {411, 412, 421, 422, 423}},
      {LandCover::water, {511, 512, 521, 522, 523}},
  };
  std::vector<std::pair<int, int>> entries;
  for (const auto& [target, codes] : groups) {
    for (int code : codes) entries.emplace_back(code, static_cast<int>(target));
  }
  return ReclassTable(entries);
}

std::vector<ClassCell> reclassify(const std::vector<ClassCell>& cells, const ReclassTable& table) {
  std::vector<ClassCell> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back({c.location, table.map(c.code)});
  return out;
}

std::map<int, double> area_shares(const std::map<int, std::size_t>& class_counts, double cell_area,
                                  double area_total) {
  if (!(cell_area > 0.0) || !(area_total > 0.0)) throw Error(Errc::domain, "cell and total areas must be positive");
  std::size_t cells = 0;
  for (const auto& [_, n] : class_counts) cells += n;
  const double covered = static_cast<double>(cells) * cell_area;
  if (covered > area_total * (1.0 + 1e-6)) {
    throw Error(Errc::coverage_overflow, fmt::format("classified area {} exceeds total {}", covered, area_total));
  }
  std::map<int, double> shares;
  for (const auto& [code, n] : class_counts) {
    shares[code] = 100.0 * static_cast<double>(n) * cell_area / area_total;
  }
  return shares;
}

ElevationShares elevation_band_shares(const std::vector<double>& dem_values, double low, double high) {
  if (dem_values.empty()) throw Error(Errc::empty_input, "no elevation values");
  std::size_t plain = 0, hill = 0, mountain = 0;
  for (double z : dem_values) {
    if (z <= low) ++plain;
    else if (z <= high) ++hill;
    else ++mountain;
  }
  const double n = static_cast<double>(dem_values.size());
  return {100.0 * static_cast<double>(plain) / n, 100.0 * static_cast<double>(hill) / n,
          100.0 * static_cast<double>(mountain) / n};
}

std::map<std::string, std::map<int, std::size_t>> tally_cells(const std::vector<ClassCell>& cells,
                                                              const std::vector<AreaUnit>& areas) {
  std::map<std::string, std::map<int, std::size_t>> out;
  for (const auto& area : areas) out[area.id()];
  for (const auto& cell : cells) {
    for (const auto& area : areas) {
      if (area.contains(cell.location)) {
        ++out[area.id()][cell.code];
        break;
      }
    }
  }
  return out;
}

SnapshotSchedule::SnapshotSchedule(std::vector<SnapshotRange> ranges) : ranges_(std::move(ranges)) {
  std::sort(ranges_.begin(), ranges_.end(),
            [](const SnapshotRange& a, const SnapshotRange& b) { return a.first_year < b.first_year; });
  for (std::size_t i = 0; i < ranges_.size(); ++i) {
    if (ranges_[i].first_year > ranges_[i].last_year) {
      throw Error(Errc::domain, fmt::format("inverted range for snapshot {}", ranges_[i].snapshot_year));
    }
    if (i > 0 && ranges_[i].first_year <= ranges_[i - 1].last_year) {
      throw Error(Errc::domain, fmt::format("snapshots {} and {} overlap", ranges_[i - 1].snapshot_year,
                                            ranges_[i].snapshot_year));
    }
  }
}

int SnapshotSchedule::snapshot_for(int target_year) const {
  for (const auto& r : ranges_) {
    if (target_year >= r.first_year && target_year <= r.last_year) return r.snapshot_year;
  }
  throw Error(Errc::schedule_gap, fmt::format("no snapshot covers {}", target_year));
}

SnapshotSchedule SnapshotSchedule::corine() { return SnapshotSchedule({{2012, 2011, 2017}, {2018, 2018, 2024}}); }

SnapshotSchedule SnapshotSchedule::gdlc() {
  return SnapshotSchedule({{2015, 2011, 2015}, {2016, 2016, 2016}, {2017, 2017, 2017}, {2018, 2018, 2018},
                           {2019, 2019, 2024}});
}

int expand_piecewise(const SnapshotSchedule& schedule, int target_year) { return schedule.snapshot_for(target_year); }

}  // namespace harmonia
