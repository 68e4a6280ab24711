#include <doctest.h>

#include <random>

#include "harmonia/areal.hpp"
#include "harmonia/error.hpp"

using namespace harmonia;

TEST_SUITE("areal") {
  TEST_CASE("crosswalk sum and mean") {
    const Crosswalk xw({{"M1", "A"}, {"M2", "A"}, {"M3", "B"}});
    const auto s = aggregate_crosswalk({{"M1", 100.0}, {"M2", 250.0}}, xw, AggregationMethod::sum);
    CHECK(*s.at("A") == 350.0);
    CHECK_FALSE(s.at("B").has_value());
    const auto m = aggregate_crosswalk({{"M1", 10.0}, {"M2", 20.0}, {"M3", std::nullopt}}, xw, AggregationMethod::mean);
    CHECK(*m.at("A") == 15.0);
    CHECK_FALSE(m.at("B").has_value());
  }

  TEST_CASE("unmapped municipalities are listed") {
    const Crosswalk xw(std::vector<std::pair<std::string, std::string>>{{"M1", "A"}});
    try {
      aggregate_crosswalk({{"M1", 1.0}, {"M9", 2.0}, {"M7", 3.0}}, xw, AggregationMethod::sum);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::unmapped_unit);
      const std::string what = e.what();
      CHECK(what.find("M9") != std::string::npos);
      CHECK(what.find("M7") != std::string::npos);
    }
  }

  TEST_CASE("random crosswalk matches a group-by and sum is additive") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> area(0, 6);
    std::uniform_real_distribution<double> val(0, 100);
    std::vector<std::pair<std::string, std::string>> entries;
    std::vector<MunicipalValue> values;
    std::map<std::string, double> sums;
    std::map<std::string, int> counts;
    for (int i = 0; i < 50; ++i) {
      const std::string m = "M" + std::to_string(i), a = "A" + std::to_string(area(rng));
      entries.emplace_back(m, a);
      const double v = val(rng);
      values.emplace_back(m, v);
      sums[a] += v;
      counts[a] += 1;
    }
    const Crosswalk xw(entries);
    const auto s = aggregate_crosswalk(values, xw, AggregationMethod::sum);
    const auto m = aggregate_crosswalk(values, xw, AggregationMethod::mean);
    for (const auto& [a, total] : sums) {
      CHECK(*s.at(a) == doctest::Approx(total).epsilon(1e-12));
      CHECK(*m.at(a) == doctest::Approx(total / counts[a]).epsilon(1e-12));
    }
    // splitting a value into two records with the same id
    auto split = values;
    const double v0 = *split[0].second;
    split[0].second = 0.25 * v0;
    split.emplace_back(split[0].first, 0.75 * v0);
    const auto s2 = aggregate_crosswalk(split, xw, AggregationMethod::sum);
    for (const auto& [a, total] : s) CHECK(*s2.at(a) == doctest::Approx(*total).epsilon(1e-12));
  }

  TEST_CASE("reclassification") {
    const auto t = ReclassTable::corine();
    CHECK(t.map(211) == 2);
    CHECK(t.map(212) == 2);
    CHECK(t.map(213) == 2);
    CHECK(land_cover_name(2) == "Arable-Land");
    CHECK(reclassify({}, t).empty());
    const ReclassTable id({{1, 1}, {2, 2}});
    const std::vector<ClassCell> cells{{{0, 0}, 1}, {{1, 0}, 2}, {{2, 0}, 1}};
    const auto same = reclassify(cells, id);
    REQUIRE(same.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(same[i].code == cells[i].code);
    try {
      reclassify({{{0, 0}, 999}}, t);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::unmapped_class);
    }
    CHECK_THROWS_AS(ReclassTable({{1, 1}, {1, 2}}), Error);
  }

  TEST_CASE("area shares") {
    const auto one = area_shares({{3, 4}}, 0.25, 1.0);
    CHECK(one.at(3) == 100.0);
    const auto two = area_shares({{1, 3}, {2, 1}}, 0.25, 1.0);
    CHECK(two.at(1) == doctest::Approx(75.0));
    CHECK(two.at(2) == doctest::Approx(25.0));
    const auto scaled = area_shares({{1, 3}, {2, 1}}, 0.5, 2.0);
    CHECK(scaled.at(1) == doctest::Approx(75.0));
    try {
      area_shares({{1, 5}}, 0.25, 1.0);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::coverage_overflow);
    }
  }

  TEST_CASE("tessellated random class maps: tally and shares sum to 100") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> cls(1, 9);
    const std::vector<AreaUnit> areas{make_rectangle("L", 0, 0, 5, 10), make_rectangle("R", 5, 0, 10, 10)};
    std::vector<ClassCell> cells;
    std::map<std::string, std::map<int, std::size_t>> expect;
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j) {
        const ClassCell c{{0.25 + 0.5 * i, 0.25 + 0.5 * j}, cls(rng)};
        cells.push_back(c);
        ++expect[i < 10 ? "L" : "R"][c.code];
      }
    const auto tally = tally_cells(cells, areas);
    CHECK(tally == expect);
    for (const auto& a : areas) {
      const auto shares = area_shares(tally.at(a.id()), 0.25, a.area());
      double sum = 0.0;
      for (const auto& [c, s] : shares) {
        CHECK(s == doctest::Approx(100.0 * 0.25 * expect[a.id()][c] / 50.0));
        sum += s;
      }
      CHECK(std::abs(sum - 100.0) <= 1e-9);
    }
  }

  TEST_CASE("elevation bands") {
    const auto e = elevation_band_shares({100, 300, 700, 150});
    CHECK(e.plain == 50.0);
    CHECK(e.hill == 25.0);
    CHECK(e.mountain == 25.0);
    CHECK(elevation_band_shares({200}).plain == 100.0);
    CHECK(elevation_band_shares({600}).hill == 100.0);
    const auto high = elevation_band_shares({1000, 1000});
    CHECK(high.mountain == 100.0);
    CHECK(high.plain + high.hill == 0.0);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> z(0, 1500);
    std::vector<double> dem(997);
    for (auto& v : dem) v = z(rng);
    const auto r = elevation_band_shares(dem);
    CHECK(std::abs(r.plain + r.hill + r.mountain - 100.0) <= 1e-9);
  }

  TEST_CASE("snapshot schedules") {
    const auto clc = SnapshotSchedule::corine();
    CHECK(expand_piecewise(clc, 2014) == 2012);
    CHECK(expand_piecewise(clc, 2011) == 2012);
    CHECK(expand_piecewise(clc, 2017) == 2012);
    CHECK(expand_piecewise(clc, 2018) == 2018);
    CHECK(expand_piecewise(clc, 2024) == 2018);
    const auto gdlc = SnapshotSchedule::gdlc();
    CHECK(expand_piecewise(gdlc, 2022) == 2019);
    CHECK(expand_piecewise(gdlc, 2012) == 2015);
    CHECK(expand_piecewise(gdlc, 2017) == 2017);
    try {
      expand_piecewise(clc, 2030);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::schedule_gap);
    }
    CHECK_THROWS_AS(SnapshotSchedule({{2012, 2011, 2015}, {2014, 2015, 2016}}), Error);
  }
}
