#include "harmonia/demo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "harmonia/rng.hpp"

namespace harmonia {

namespace {

constexpr int kSide = 16;      // areas per side
constexpr int kGrid = 20;      // climate cells per side
constexpr double kExtent = 16.0;

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : days[m - 1];
}

}  // namespace

double demo_elevation(const Point& p) noexcept {
  const double dx = p.x - 12.0, dy = p.y - 12.0;
  return 60.0 + 900.0 * std::exp(-(dx * dx + dy * dy) / 18.0) + 15.0 * p.x;
}

std::vector<LongRecord> DemoData::cell_series(std::size_t cell) const {
  auto rng = substream(seed, "demo-data/climate/" + cell_ids[cell]);
  std::normal_distribution<double> noise(0.0, 1.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const Point p = cells[cell];
  const double z = demo_elevation(p);
  const double base = 273.15 + 12.0 + 0.3 * (p.x - 8.0) - 0.0065 * z + 1.5 * std::sin(p.y / 3.0);
  const double wet = 0.3 + 0.15 * std::sin(p.x / 4.0) + 0.00015 * z;
  const double depression = 2.0 + 4.0 * p.x / kExtent + 1.5 * std::cos(p.y / 4.0);
  std::exponential_distribution<double> rain(1.0 / (0.006 * (0.6 + 0.8 * p.y / kExtent)));

  std::vector<LongRecord> out;
  out.reserve(years.size() * 366 * 3);
  for (int y : years) {
    int doy = 0;
    for (int m = 1; m <= 12; ++m) {
      for (int d = 1; d <= days_in_month(y, m); ++d, ++doy) {
        const Timestamp ts{y, m, d, 12, 0, 0};
        const double season = -std::cos(2.0 * std::numbers::pi * (doy - 15) / 365.0);
        const double t = base + 9.0 * season + 0.15 * (y - years.front()) + noise(rng);
        const double dew = t - depression * (0.5 + unit(rng));
        const double tp = unit(rng) < wet ? rain(rng) : 0.0;
        out.push_back({cell_ids[cell], p.x, p.y, ts, "t2m", t});
        out.push_back({cell_ids[cell], p.x, p.y, ts, "d2m", dew});
        out.push_back({cell_ids[cell], p.x, p.y, ts, "tp", tp});
      }
    }
  }
  return out;
}

DemoData make_demo_data(std::uint64_t seed) {
  DemoData data;
  data.seed = seed;
  data.years = {2015, 2016, 2017, 2018, 2019};

  const double side = kExtent / kSide;
  for (int r = 0; r < kSide; ++r) {
    for (int c = 0; c < kSide; ++c) {
      const int idx = r * kSide + c + 1;
      data.areas.push_back(make_rectangle(fmt::format("A{:03d}", idx), c * side, r * side, (c + 1) * side,
                                          (r + 1) * side));
    }
  }

  data.cell_size = kExtent / kGrid;
  for (int r = 0; r < kGrid; ++r) {
    for (int c = 0; c < kGrid; ++c) {
      data.cell_ids.push_back(fmt::format("C{:04d}", r * kGrid + c + 1));
      data.cells.push_back({(c + 0.5) * data.cell_size, (r + 0.5) * data.cell_size});
    }
  }

  // Four municipalities per area.
  std::vector<std::string> municipalities;
  for (const auto& a : data.areas) {
    for (int k = 0; k < 4; ++k) {
      municipalities.push_back(fmt::format("M{:04d}", municipalities.size() + 1));
      data.crosswalk.emplace_back(municipalities.back(), a.id());
    }
  }

  {
    auto rng = substream(seed, "demo-data/livestock");
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t m = 0; m < municipalities.size(); ++m) {
      const auto& area = data.areas[m / 4];
      const auto [lo, hi] = area.bounds();
      const double level = 400.0 + 250.0 * std::sin(lo.x / 3.0) * std::cos(hi.y / 5.0);
      for (int y : data.years) {
        const double heads = std::max(0.0, std::round(level * (1.0 + 0.02 * (y - 2015)) + 25.0 * noise(rng)));
        data.livestock.push_back({municipalities[m], y, "livestock_heads", heads});
      }
    }
  }

  // Census benchmarks; a few strata are empty to exercise the fallbacks.
  static constexpr double kBase[2][3] = {{30.0, 18.0, 9.0}, {5.0, 3.0, 1.5}};
  auto census_rng = substream(seed, "demo-data/census");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::map<std::string, StratumGrid> area_2020;
  for (std::size_t m = 0; m < municipalities.size(); ++m) {
    for (int s = 0; s < 2; ++s) {
      for (int t = 0; t < 3; ++t) {
        const bool empty = unit(census_rng) < (s == 1 ? 0.25 : 0.03);
        const double n2010 = empty ? 0.0 : std::round(kBase[s][t] * (0.5 + unit(census_rng)));
        const double n2020 = empty ? 0.0 : std::round(n2010 * (0.75 + 0.2 * unit(census_rng)));
        data.census.push_back({municipalities[m], static_cast<SizeClass>(s), static_cast<SpecClass>(t), 2010, n2010});
        data.census.push_back({municipalities[m], static_cast<SizeClass>(s), static_cast<SpecClass>(t), 2020, n2020});
        area_2020[data.crosswalk[m].second][s][t] += n2020;
      }
    }
  }

  // Farm sample: per area-year size from a skewed mix so that some domains
  // are empty or thinly sampled; strata drawn among populated cells.
  auto farm_rng = substream(seed, "demo-data/farms");
  std::normal_distribution<double> z(0.0, 1.0);
  int farm_id = 0;
  for (const auto& a : data.areas) {
    const auto& pop = area_2020[a.id()];
    std::vector<std::pair<int, int>> strata;
    std::vector<double> probs;
    for (int s = 0; s < 2; ++s) {
      for (int t = 0; t < 3; ++t) {
        if (pop[s][t] <= 0.0) continue;
        strata.emplace_back(s, t);
        probs.push_back(pop[s][t] * (s == 1 ? 4.0 : 1.0));
      }
    }
    const auto [lo, hi] = a.bounds();
    const double area_effect = 0.25 * std::sin(lo.x / 2.5 + hi.y / 4.0);
    for (int y : data.years) {
      const double u = unit(farm_rng);
      int n = 0;
      if (u < 0.04) n = 0;
      else if (u < 0.10) n = 1;
      else if (u < 0.17) n = 2;
      else n = 3 + static_cast<int>(unit(farm_rng) * 12.0);
      std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
      StratumGrid drawn{};
      for (int k = 0; k < n; ++k) {
        const auto [s, t] = strata[pick(farm_rng)];
        if (drawn[s][t] + 1 > pop[s][t]) continue;
        drawn[s][t] += 1;
        FarmRecord f;
        f.farm_id = fmt::format("F{:06d}", ++farm_id);
        f.area = a.id();
        f.size = static_cast<SizeClass>(s);
        f.spec = static_cast<SpecClass>(t);
        f.year = y;
        const double mu = (s == 1 ? std::log(90.0) : std::log(14.0)) + (t == 1 ? 0.2 : 0.0) + area_effect;
        f.values["uaa"] = std::round(100.0 * std::exp(mu + 0.45 * z(farm_rng))) / 100.0;
        data.farms.push_back(std::move(f));
      }
    }
  }
  return data;
}

}  // namespace harmonia
