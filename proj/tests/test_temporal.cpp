#include <doctest.h>

#include <cmath>
#include <random>

#include "harmonia/error.hpp"
#include "harmonia/temporal.hpp"

using namespace harmonia;

namespace {

// Magnus ratio evaluated directly.
double magnus_rh(double t, double d) {
  const double a = 17.625, b = 243.04;
  return 100.0 * std::exp(a * d / (b + d)) / std::exp(a * t / (b + t));
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

TimedSeries daily_series(std::mt19937_64& rng, int year, double missing_rate) {
  static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  std::normal_distribution<double> z(10.0, 6.0);
  std::uniform_real_distribution<double> u(0, 1);
  TimedSeries s{"t2m", "c", {}};
  for (int m = 1; m <= 12; ++m) {
    const int days = kDays[m - 1] + (m == 2 && is_leap(year) ? 1 : 0);
    for (int d = 1; d <= days; ++d) {
      Observation o{{year, m, d, 12, 0, 0}, z(rng)};
      if (u(rng) < missing_rate) o.value.reset();
      s.observations.push_back(o);
    }
  }
  return s;
}

}  // namespace

TEST_SUITE("temporal") {
  TEST_CASE("unit conversions") {
    CHECK(convert_unit(273.15, UnitRule::kelvin_to_celsius) == doctest::Approx(0.0));
    CHECK(convert_unit(0.001, UnitRule::metres_to_millimetres) == doctest::Approx(1.0));
    CHECK(convert_unit(5.5, UnitRule::identity) == 5.5);
    CHECK(parse_unit_rule(to_string(UnitRule::metres_to_millimetres)) == UnitRule::metres_to_millimetres);
  }

  TEST_CASE("wind speed and printed direction") {
    CHECK(wind_speed(3, 4) == 5.0);
    CHECK(wind_speed(0, 0) == 0.0);
    CHECK(wind_speed(-1, 0) == 1.0);
    CHECK(*wind_direction(0, 1) == doctest::Approx(180.0));
    CHECK(*wind_direction(0, -1) == doctest::Approx(0.0));
    CHECK(*wind_direction(1, 0) == doctest::Approx(90.0));
    CHECK_FALSE(wind_direction(0, 0).has_value());
    // conventional "blowing from": a southerly (v > 0) wind comes from 180
    CHECK(*wind_direction(0, 1, WindConvention::meteorological) == doctest::Approx(180.0));
    CHECK(*wind_direction(1, 0, WindConvention::meteorological) == doctest::Approx(270.0));
  }

  TEST_CASE("wind symmetry under sign reversal") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-20, 20);
    for (int i = 0; i < 1000; ++i) {
      const double a = u(rng), b = u(rng);
      CHECK(wind_speed(a, b) == wind_speed(-a, -b));
      for (auto conv : {WindConvention::printed, WindConvention::meteorological}) {
        const double d1 = *wind_direction(a, b, conv), d2 = *wind_direction(-a, -b, conv);
        CHECK(d1 >= 0.0);
        CHECK(d1 < 360.0);
        const double diff = std::fmod(std::abs(d1 - d2), 360.0);
        CHECK(diff == doctest::Approx(180.0).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("relative humidity") {
    CHECK(relative_humidity(15, 15) == doctest::Approx(100.0));
    CHECK(relative_humidity(20, 10) == doctest::Approx(magnus_rh(20, 10)).epsilon(1e-12));
    CHECK(relative_humidity(20, 10) == doctest::Approx(52.5).epsilon(0.002));
    CHECK(relative_humidity(10, 10.3) == 100.0);
    CHECK_THROWS_AS(relative_humidity(10, 11), Error);
    CHECK_THROWS_AS(relative_humidity(-250, -260), Error);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> t(-40, 45), dep(0, 40);
    for (int i = 0; i < 1000; ++i) {
      const double tt = t(rng);
      const double rh = relative_humidity(tt, tt - dep(rng));
      CHECK(rh > 0.0);
      CHECK(rh <= 100.0);
    }
  }

  TEST_CASE("timestamps and seasons") {
    CHECK(parse_timestamp("2015-12-15") == Timestamp{2015, 12, 15, 0, 0, 0});
    CHECK(parse_timestamp("2015-12-15T06:30Z") == Timestamp{2015, 12, 15, 6, 30, 0});
    CHECK(parse_timestamp("2015-12-15 06:30:10") == Timestamp{2015, 12, 15, 6, 30, 10});
    CHECK_THROWS_AS(parse_timestamp("2015-13-01"), Error);
    CHECK_THROWS_AS(parse_timestamp("2015-02-30"), Error);
    CHECK((assign_season(parse_timestamp("2015-12-15")) == SeasonYear{Season::winter, 2015}));
    CHECK((assign_season(parse_timestamp("2016-02-10")) == SeasonYear{Season::winter, 2016}));
    CHECK((assign_season(parse_timestamp("2019-07-01")) == SeasonYear{Season::summer, 2019}));
    CHECK((assign_season(parse_timestamp("2019-03-01")) == SeasonYear{Season::spring, 2019}));
    CHECK((assign_season(parse_timestamp("2019-11-30")) == SeasonYear{Season::fall, 2019}));
  }

  TEST_CASE("summary statistics") {
    const std::vector<double> five(20, 5.0);
    const auto c = summarize_values(five);
    CHECK(c.mean == 5.0);
    CHECK(c.min == 5.0);
    CHECK(c.max == 5.0);
    CHECK(c.sd == 0.0);
    std::vector<double> months;
    for (int i = 1; i <= 12; ++i) months.push_back(i);
    const auto m = summarize_values(months);
    CHECK(m.mean == 6.5);
    CHECK(m.sum == 78.0);
    const std::vector<double> one{3.0};
    CHECK(summarize_values(one).single_observation);
    CHECK(summarize_values(one).sd == 0.0);
    CHECK_THROWS_AS(summarize_values(std::vector<double>{}), Error);
  }

  TEST_CASE("streaming statistics match a two-pass reference") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> z(1e3, 3.0);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> v(5 + rep * 7);
      for (auto& x : v) x = z(rng);
      double sum = 0.0;
      for (double x : v) sum += x;
      const double mean = sum / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
      const auto s = summarize_values(v);
      CHECK(std::abs(s.mean - mean) <= 1e-12 * std::abs(mean));
      CHECK(std::abs(s.sd - sd) <= 1e-12 * std::max(1.0, sd) * 1e3);
      CHECK(s.min == *std::min_element(v.begin(), v.end()));
      CHECK(s.max == *std::max_element(v.begin(), v.end()));
    }
  }

  TEST_CASE("count-weighted seasonal means reproduce the annual mean") {
    std::mt19937_64 rng(23);
    for (int k = 0; k < 100; ++k) {
      const int year = 2011 + k % 14;
      const auto series = daily_series(rng, year, 0.1);
      const auto annual = summarize(series, Window::annual);
      const auto seasonal = summarize(series, Window::seasonal);
      REQUIRE(annual.size() == 1);
      REQUIRE(seasonal.size() == 4);
      double num = 0.0;
      std::size_t cnt = 0;
      for (const auto& [key, st] : seasonal) {
        CHECK(key.year == year);
        num += st->mean * static_cast<double>(st->count);
        cnt += st->count;
      }
      const auto& a = *annual.begin()->second;
      CHECK(cnt == a.count);
      CHECK(std::abs(num / static_cast<double>(cnt) - a.mean) <= 1e-9);
    }
  }

  TEST_CASE("windows with only missing observations are missing") {
    TimedSeries s{"tp", "c", {}};
    s.observations.push_back({{2015, 1, 1, 0, 0, 0}, std::nullopt});
    s.observations.push_back({{2015, 7, 1, 0, 0, 0}, 2.0});
    const auto seasonal = summarize(s, Window::seasonal);
    CHECK_FALSE(seasonal.at({2015, Season::winter}).has_value());
    CHECK(seasonal.at({2015, Season::summer})->mean == 2.0);
    s.observations.push_back({{2015, 3, 1, 0, 0, 0}, 1.0});
    CHECK_THROWS_AS(summarize(s, Window::annual), Error);
  }

  TEST_CASE("aggregate_temporal derives and groups") {
    std::vector<LongRecord> recs;
    for (int d = 1; d <= 3; ++d) {
      const Timestamp t{2016, 1, d, 0, 0, 0};
      recs.push_back({"c1", 0.5, 0.5, t, "t2m", 293.15});
      recs.push_back({"c1", 0.5, 0.5, t, "d2m", 283.15});
      recs.push_back({"c1", 0.5, 0.5, t, "u10", 3.0});
      recs.push_back({"c1", 0.5, 0.5, t, "v10", 4.0});
      recs.push_back({"c1", 0.5, 0.5, t, "tp", 0.001 * d});
    }
    TemporalConfig cfg;
    cfg.seasonal = false;
    const auto rows = aggregate_temporal(recs, cfg);
    auto find = [&](const std::string& var, const std::string& stat) -> std::optional<double> {
      for (const auto& r : rows)
        if (r.variable == var && r.stat == stat && r.period == "ANNUAL") return r.value;
      FAIL("row not found: " << var << " " << stat);
      return std::nullopt;
    };
    CHECK(*find("t2m", "mean") == doctest::Approx(20.0));
    CHECK(*find("tp", "sum") == doctest::Approx(6.0));
    CHECK(*find("ws10", "mean") == doctest::Approx(5.0));
    CHECK(*find("rh", "mean") == doctest::Approx(magnus_rh(20, 10)).epsilon(1e-9));
    CHECK(find("wd10", "mean").has_value());
    auto rank = [&](const SummaryRow& r) {
      const auto stat = std::find(cfg.stats.begin(), cfg.stats.end(), r.stat) - cfg.stats.begin();
      return std::make_tuple(r.cell_id, r.year, r.variable, stat);
    };
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rank(rows[i - 1]) < rank(rows[i]));

    cfg.seasonal = true;
    const auto both = aggregate_temporal(recs, cfg);
    CHECK(both.front().period == "ANNUAL");
    CHECK(both.back().period == "Winter");
  }

  TEST_CASE("physical plausibility") {
    CHECK(physical_violation("tp", -0.1).has_value());
    CHECK_FALSE(physical_violation("tp", 0.0).has_value());
    CHECK(physical_violation("rh", 150.0).has_value());
    CHECK(physical_violation("rh", 0.0).has_value());
    CHECK_FALSE(physical_violation("t2m", -30.0).has_value());
  }
}
