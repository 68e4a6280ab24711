#include <doctest.h>

#include <cmath>
#include <random>

#include "harmonia/error.hpp"
#include "harmonia/variogram.hpp"
#include "oracles.hpp"

using namespace harmonia;

namespace {

VariogramSpec spec(Family f, double c0, double c, double a, double nu = 0.5) { return {{f, nu}, c0, c, a}; }

const std::vector<ModelFamily> kFamilies{{Family::spherical, 0.5}, {Family::exponential, 0.5}, {Family::gaussian, 0.5},
                                         {Family::matern, 0.5},    {Family::matern, 1.5},      {Family::matern, 2.5}};

EmpiricalVariogram synthetic_bins(const VariogramSpec& s, int lags, double step) {
  EmpiricalVariogram emp;
  for (int j = 1; j <= lags; ++j) emp.bins.push_back({j * step, semivariance(s, j * step), 10});
  return emp;
}

}  // namespace

TEST_SUITE("variogram") {
  TEST_CASE("closed-form values") {
    CHECK(semivariance(spec(Family::exponential, 0, 1, 1), 1.0) == doctest::Approx(1.0 - std::exp(-1.0)));
    CHECK(semivariance(spec(Family::spherical, 0.2, 0.8, 5), 7.0) == doctest::Approx(1.0));
    CHECK(covariance(spec(Family::exponential, 0, 1, 1), 0.0) == 1.0);
    CHECK(covariance(spec(Family::exponential, 0, 1, 1), 1.0) == doctest::Approx(std::exp(-1.0)));
    for (const auto& m : kFamilies) {
      const VariogramSpec s{m, 0.3, 1.2, 2.0};
      CHECK(semivariance(s, 0.0) == 0.0);
      CHECK(covariance(s, 0.0) == doctest::Approx(1.5));
      CHECK(std::abs(covariance({m, 0.5, 0.5, 2.0}, 40.0)) <= 1e-6);
    }
    CHECK(covariance(spec(Family::spherical, 0.5, 0.5, 2.0), 2.5) == 0.0);
  }

  TEST_CASE("negative lag is a domain error") {
    try {
      semivariance(spec(Family::gaussian, 0, 1, 1), -0.1);
      FAIL("accepted negative lag");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::domain);
    }
    CHECK_THROWS_AS(covariance(spec(Family::gaussian, 0, 1, 1), -1.0), Error);
  }

  TEST_CASE("matern closed forms and family identity") {
    const double h = 1.7, a = 1.3;
    const double r = h / a;
    CHECK(covariance(spec(Family::matern, 0, 1, a, 0.5), h) == doctest::Approx(std::exp(-r)));
    CHECK(covariance(spec(Family::matern, 0, 1, a, 1.5), h) == doctest::Approx((1 + r) * std::exp(-r)));
    CHECK(covariance(spec(Family::matern, 0, 1, a, 2.5), h) == doctest::Approx((1 + r + r * r / 3) * std::exp(-r)));
    CHECK(ModelFamily::parse("matern(1.5)") == ModelFamily{Family::matern, 1.5});
    CHECK(ModelFamily::parse("Exp").family == Family::exponential);
    CHECK_THROWS_AS(ModelFamily::parse("matern(0.7)"), Error);
  }

  TEST_CASE("covariance plus semivariance is the sill; gamma is monotone") {
    for (const auto& m : kFamilies) {
      const VariogramSpec s{m, 0.25, 1.75, 3.0};
      double prev = 0.0;
      for (int i = 1; i <= 400; ++i) {
        const double h = 0.05 * i;
        const double g = semivariance(s, h);
        CHECK(g + covariance(s, h) == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(g >= prev - 1e-15);
        CHECK(covariance(s, h) >= 0.0);
        CHECK(covariance(s, h) == doctest::Approx(oracle::cov(s, h)).epsilon(1e-14));
        prev = g;
      }
    }
  }

  TEST_CASE("empirical variogram small cases") {
    const std::vector<Sample> two{{{0, 0}, 0.0}, {{1, 0}, 2.0}};
    const auto emp = empirical_variogram(two, 1, 2.0);
    REQUIRE(emp.bins.size() == 1);
    CHECK(emp.bins[0].distance == 1.0);
    CHECK(emp.bins[0].gamma == 2.0);
    CHECK(emp.bins[0].pairs == 1);

    std::vector<Sample> flat;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) flat.push_back({{double(i), double(j)}, 3.0});
    for (const auto& b : empirical_variogram(flat, 5, 3.0).bins) CHECK(b.gamma == 0.0);

    try {
      empirical_variogram(two, 3, 0.5);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::empty_variogram);
    }
  }

  TEST_CASE("empirical variogram matches exhaustive pair enumeration") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 10);
    std::vector<Sample> s(50);
    for (auto& x : s) {
      x.location = {u(rng), u(rng)};
      x.value = 2.0 + 0.7 * x.location.x - 1.3 * x.location.y;
    }
    const std::size_t lags = 8;
    const double cutoff = 6.0;
    const auto emp = empirical_variogram(s, lags, cutoff);
    // Oracle: collect every ordered pair once per unordered pair, per lag.
    std::vector<std::vector<std::pair<double, double>>> per_lag(lags);
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t k = 0; k < s.size(); ++k) {
        if (k <= i) continue;
        const double d = oracle::dist(s[i].location, s[k].location);
        if (d > cutoff) continue;
        std::size_t lag = 0;
        while (lag + 1 < lags && d >= (lag + 1) * cutoff / lags) ++lag;
        per_lag[lag].emplace_back(d, 0.5 * std::pow(s[i].value - s[k].value, 2));
      }
    }
    std::size_t b = 0;
    for (const auto& pairs : per_lag) {
      if (pairs.empty()) continue;
      REQUIRE(b < emp.bins.size());
      double dsum = 0, gsum = 0;
      for (const auto& [d, g] : pairs) {
        dsum += d;
        gsum += g;
      }
      CHECK(emp.bins[b].pairs == pairs.size());
      CHECK(std::abs(emp.bins[b].distance - dsum / pairs.size()) <= 1e-12);
      CHECK(std::abs(emp.bins[b].gamma - gsum / pairs.size()) <= 1e-12 * std::max(1.0, gsum / pairs.size()));
      ++b;
    }
    CHECK(b == emp.bins.size());
    for (std::size_t i = 1; i < emp.bins.size(); ++i) CHECK(emp.bins[i].distance > emp.bins[i - 1].distance);

    // permutation invariance
    auto shuffled = s;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto emp2 = empirical_variogram(shuffled, lags, cutoff);
    REQUIRE(emp2.bins.size() == emp.bins.size());
    for (std::size_t i = 0; i < emp.bins.size(); ++i) {
      CHECK(emp2.bins[i].pairs == emp.bins[i].pairs);
      CHECK(emp2.bins[i].gamma == doctest::Approx(emp.bins[i].gamma).epsilon(1e-12));
    }
  }

  TEST_CASE("fit recovers an exponential model and beats a dense grid search") {
    const auto truth = spec(Family::exponential, 0.0, 2.0, 3.0);
    const auto emp = synthetic_bins(truth, 12, 0.75);
    const auto fit = fit_variogram(emp, {Family::exponential, 0.5}, 2.0, 9.0);
    CHECK(fit.nugget <= 0.02);
    CHECK(fit.partial_sill == doctest::Approx(2.0).epsilon(0.01));
    CHECK(fit.range == doctest::Approx(3.0).epsilon(0.01));

    double best = INFINITY;
    for (int i = 0; i <= 20; ++i)
      for (int j = 0; j <= 40; ++j)
        for (int k = 1; k <= 60; ++k) {
          const VariogramSpec s = spec(Family::exponential, 0.025 * i, 1.0 + 0.05 * j, 0.1 * k);
          best = std::min(best, wls_objective(emp, s));
        }
    CHECK(wls_objective(emp, fit) <= best + 1e-12);
  }

  TEST_CASE("fit never worse than the starting point") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (const auto& m : kFamilies) {
      EmpiricalVariogram emp;
      for (int j = 1; j <= 10; ++j) emp.bins.push_back({0.5 * j, 0.3 + u(rng), std::size_t(5 + j)});
      const auto fit = fit_variogram(emp, m, 1.0, 6.0);
      CHECK(wls_objective(emp, fit) <= wls_objective(emp, {m, 0.0, 1.0, 2.0}) + 1e-15);
      CHECK(fit.nugget >= 0.0);
      CHECK(fit.partial_sill >= 0.0);
      CHECK(fit.range > 0.0);
    }
  }

  TEST_CASE("zero surface gives a pure-nugget spec; few bins rejected") {
    EmpiricalVariogram zero;
    for (int j = 1; j <= 6; ++j) zero.bins.push_back({double(j), 0.0, 3});
    const auto fit = fit_variogram(zero, {Family::gaussian, 0.5}, 0.0, 6.0);
    CHECK(fit.partial_sill <= 1e-12);
    CHECK(fit.pure_nugget());

    EmpiricalVariogram two;
    two.bins = {{1.0, 0.5, 3}, {2.0, 0.8, 3}};
    try {
      fit_variogram(two, {Family::gaussian, 0.5}, 1.0, 3.0);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::insufficient_data);
    }
  }

  TEST_CASE("matern(0.5) fit equals the exponential fit") {
    const auto emp = synthetic_bins(spec(Family::exponential, 0.1, 1.5, 2.0), 12, 0.5);
    const auto a = fit_variogram(emp, {Family::exponential, 0.5}, 1.6, 6.0);
    const auto b = fit_variogram(emp, {Family::matern, 0.5}, 1.6, 6.0);
    CHECK(std::abs(a.nugget - b.nugget) <= 1e-6);
    CHECK(std::abs(a.partial_sill - b.partial_sill) <= 1e-6);
    CHECK(std::abs(a.range - b.range) <= 1e-6);
  }
}
