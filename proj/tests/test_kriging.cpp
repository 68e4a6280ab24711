#include <doctest.h>

#include <cmath>
#include <random>

#include "harmonia/error.hpp"
#include "harmonia/kriging.hpp"
#include "oracles.hpp"

using namespace harmonia;

namespace {

std::vector<Sample> grid6() {
  std::vector<Sample> s;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) s.push_back({{double(i), double(j)}, std::sin(0.7 * i) + 0.3 * j});
  return s;
}

std::vector<Sample> random_samples(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<Sample> s(static_cast<std::size_t>(n));
  for (auto& x : s) {
    x.location = {u(rng), u(rng)};
    x.value = std::cos(0.4 * x.location.x) + 0.1 * x.location.y + 0.2 * u(rng);
  }
  return s;
}

}  // namespace

TEST_SUITE("kriging") {
  TEST_CASE("block kriging on a 6x6 grid agrees with a dense global solve") {
    const auto samples = grid6();
    const VariogramSpec spec{{Family::exponential, 0.5}, 0.1, 1.0, 2.5};
    const auto area = make_rectangle("B", 1.0, 1.0, 3.0, 3.0);
    const auto block = discretize_block(area, 0.25);
    const auto ours = krige_block(samples, block, spec, samples.size());
    const auto ref = oracle::dense_block_kriging(samples, block, spec);
    CHECK(ours.n_used == 36);
    CHECK(oracle::rel_close(ours.mean, ref.mean, 1e-8));
    CHECK(oracle::rel_close(ours.variance, ref.variance, 1e-8));
  }

  TEST_CASE("dense agreement across families and random layouts") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const auto samples = random_samples(seed, 25);
      for (const ModelFamily m : {ModelFamily{Family::spherical, 0.5}, ModelFamily{Family::gaussian, 0.5},
                                  ModelFamily{Family::matern, 1.5}}) {
        const VariogramSpec spec{m, 0.2, 1.0, 4.0};
        const std::vector<Point> block{{4, 4}, {4.5, 4}, {4, 4.5}, {4.5, 4.5}};
        const auto ours = krige_block(samples, block, spec, 25);
        const auto ref = oracle::dense_block_kriging(samples, block, spec);
        CHECK(oracle::rel_close(ours.mean, ref.mean, 1e-7));
        CHECK(oracle::rel_close(ours.variance, ref.variance, 1e-7));
        CHECK(ours.variance >= 0.0);
      }
    }
  }

  TEST_CASE("system: weights sum to one and lambda for n = 1") {
    const VariogramSpec spec{{Family::exponential, 0.5}, 0.0, 1.0, 1.0};
    KrigingSystem sys;
    sys.C = Eigen::MatrixXd::Constant(1, 1, 1.0);
    sys.c_target = Eigen::VectorXd::Constant(1, covariance(spec, 1.0));
    solve_ordinary_kriging(sys);
    CHECK(sys.weights(0) == doctest::Approx(1.0));
    CHECK(sys.lagrange == doctest::Approx(std::exp(-1.0) - 1.0));

    const std::vector<Sample> two{{{0, 0}, 1.0}, {{2, 0}, 3.0}};
    const auto mid = krige_point(two, {1, 0}, spec, 2);
    CHECK(mid.mean == doctest::Approx(2.0));

    const auto samples = random_samples(11, 30);
    for (int i = 0; i < 10; ++i) {
      KrigingSystem s;
      const std::size_t n = 5 + static_cast<std::size_t>(i);
      s.C.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      s.c_target.resize(static_cast<Eigen::Index>(n));
      const Point t{5, 5};
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b)
          s.C(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
              covariance(spec, distance(samples[a].location, samples[b].location));
        s.c_target(static_cast<Eigen::Index>(a)) = covariance(spec, distance(samples[a].location, t));
      }
      solve_ordinary_kriging(s);
      CHECK(std::abs(s.weights.sum() - 1.0) <= 1e-10);
    }
  }

  TEST_CASE("symmetric layout gives equal weights") {
    const VariogramSpec spec{{Family::spherical, 0.5}, 0.0, 1.0, 5.0};
    const std::vector<Sample> two{{{-1, 0}, 10.0}, {{1, 0}, 20.0}};
    const auto e = krige_point(two, {0, 3}, spec, 2);
    CHECK(e.mean == doctest::Approx(15.0));
  }

  TEST_CASE("constant field and exact interpolation") {
    auto samples = random_samples(4, 20);
    for (auto& s : samples) s.value = 7.25;
    const VariogramSpec spec{{Family::gaussian, 0.5}, 0.05, 1.0, 3.0};
    const auto e = krige_block(samples, std::vector<Point>{{2, 3}, {2.5, 3}, {3, 3}, {3.5, 3}}, spec, 12);
    CHECK(e.mean == doctest::Approx(7.25).epsilon(1e-10));

    const auto field = random_samples(5, 15);
    const VariogramSpec clean{{Family::exponential, 0.5}, 0.0, 1.0, 3.0};
    for (const auto& s : field) {
      const auto p = krige_point(field, s.location, clean, 15);
      CHECK(p.mean == doctest::Approx(s.value).epsilon(1e-8));
      CHECK(std::abs(p.variance) <= 1e-8);
    }
  }

  TEST_CASE("translation of all coordinates leaves the prediction unchanged") {
    const auto samples = random_samples(8, 20);
    const VariogramSpec spec{{Family::matern, 2.5}, 0.1, 1.0, 2.0};
    const std::vector<Point> block{{3, 3}, {3.5, 3.5}, {4, 3}, {3, 4}};
    const auto a = krige_block(samples, block, spec, 10);
    auto moved = samples;
    for (auto& s : moved) s.location = {s.location.x + 1000.0, s.location.y - 500.0};
    std::vector<Point> moved_block;
    for (const auto& p : block) moved_block.push_back({p.x + 1000.0, p.y - 500.0});
    const auto b = krige_block(moved, moved_block, spec, 10);
    CHECK(oracle::rel_close(a.mean, b.mean, 1e-8));
    CHECK(oracle::rel_close(a.variance, b.variance, 1e-7));
  }

  TEST_CASE("block covariances") {
    const VariogramSpec spec{{Family::exponential, 0.5}, 0.0, 2.0, 1.0};
    const std::vector<Point> one{{0, 0}};
    CHECK(block_to_block_cov(spec, one) == doctest::Approx(2.0));
    const std::vector<Point> pair{{0, 0}, {1, 0}};
    CHECK(block_to_block_cov(spec, pair) == doctest::Approx((2.0 + 2.0 * std::exp(-1.0)) / 2.0));
    CHECK(point_to_block_cov(spec, {0, 0}, pair) == doctest::Approx((2.0 + 2.0 * std::exp(-1.0)) / 2.0));
  }

  TEST_CASE("duplicate locations are handled by the jitter retry") {
    const VariogramSpec spec{{Family::gaussian, 0.5}, 0.0, 1.0, 2.0};
    const std::vector<Sample> dup{{{0, 0}, 1.0}, {{0, 0}, 1.0}, {{1, 0}, 2.0}};
    const auto e = krige_point(dup, {0.5, 0}, spec, 3);
    CHECK(std::isfinite(e.mean));
    CHECK(e.jittered);
  }

  TEST_CASE("predict_block records the model and default spacing") {
    const auto field = GridFieldSnapshot::make("v", 2015, std::nullopt, grid6());
    const auto area = make_rectangle("A", 0.0, 0.0, 4.0, 4.0);
    CHECK(default_block_spacing(area) == doctest::Approx(1.0));
    const VariogramSpec spec{{Family::exponential, 0.5}, 0.0, 1.0, 2.0};
    const auto p = predict_block(field, area, spec, 8, 0.0);
    CHECK(p.area_id == "A");
    CHECK(p.n_used == 8);
    CHECK(p.nmax == 8);
    CHECK_FALSE(p.error.has_value());
    CHECK(std::isfinite(p.mean));
  }
}
