#pragma once

// Reference implementations used only by the tests. Each one is written
// independently of the library code it checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "harmonia/geom.hpp"
#include "harmonia/variogram.hpp"

namespace oracle {

using harmonia::Point;
using harmonia::Sample;

// Winding-number point-in-ring test, boundary excluded (callers avoid it).
inline bool inside_ring(const std::vector<Point>& ring, const Point& p) {
  int wn = 0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const Point& a = ring[i];
    const Point& b = ring[i + 1];
    const double cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
    if (a.y <= p.y) {
      if (b.y > p.y && cross > 0) ++wn;
    } else if (b.y <= p.y && cross < 0) {
      --wn;
    }
  }
  return wn != 0;
}

// Area by fan triangulation from the first vertex.
inline double fan_area(const std::vector<Point>& ring) {
  double a = 0.0;
  for (std::size_t i = 1; i + 2 < ring.size(); ++i) {
    const Point& o = ring[0];
    const Point& p = ring[i];
    const Point& q = ring[i + 1];
    a += 0.5 * ((p.x - o.x) * (q.y - o.y) - (q.x - o.x) * (p.y - o.y));
  }
  return std::abs(a);
}

// Explicit covariance formulas, written out per family.
inline double cov(const harmonia::VariogramSpec& s, double h) {
  const double c0 = s.nugget, c = s.partial_sill, a = s.range;
  if (h == 0.0) return c0 + c;
  const double r = h / a;
  switch (s.model.family) {
    case harmonia::Family::exponential: return c * std::exp(-r);
    case harmonia::Family::gaussian: return c * std::exp(-r * r);
    case harmonia::Family::spherical: return h >= a ? 0.0 : c * (1.0 - 1.5 * r + 0.5 * r * r * r);
    case harmonia::Family::matern:
      if (s.model.nu == 0.5) return c * std::exp(-r);
      if (s.model.nu == 1.5) return c * (1.0 + r) * std::exp(-r);
      return c * (1.0 + r + r * r / 3.0) * std::exp(-r);
  }
  return 0.0;
}

inline double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct KrigeResult {
  double mean = 0.0;
  double variance = 0.0;
  Eigen::VectorXd weights;
};

// Global ordinary block kriging with every sample, solved by column-pivoting
// QR. The variance is the direct error variance of the linear predictor,
// C_VV - 2 w'c + w'Cw, which does not involve the Lagrange multiplier.
inline KrigeResult dense_block_kriging(const std::vector<Sample>& samples, const std::vector<Point>& block,
                                       const harmonia::VariogramSpec& spec) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd rhs(n + 1);
  Eigen::MatrixXd C(n, n);
  Eigen::VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      C(i, j) = cov(spec, dist(samples[static_cast<std::size_t>(i)].location, samples[static_cast<std::size_t>(j)].location));
    }
    double s = 0.0;
    for (const auto& u : block) s += cov(spec, dist(samples[static_cast<std::size_t>(i)].location, u));
    c(i) = s / static_cast<double>(block.size());
  }
  A.topLeftCorner(n, n) = C;
  A.col(n).head(n).setOnes();
  A.row(n).head(n).setOnes();
  rhs.head(n) = c;
  rhs(n) = 1.0;
  const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(rhs);
  double cvv = 0.0;
  for (const auto& u : block)
    for (const auto& v : block) cvv += cov(spec, dist(u, v));
  cvv /= static_cast<double>(block.size() * block.size());
  KrigeResult out;
  out.weights = sol.head(n);
  for (Eigen::Index i = 0; i < n; ++i) out.mean += out.weights(i) * samples[static_cast<std::size_t>(i)].value;
  out.variance = cvv - 2.0 * out.weights.dot(c) + out.weights.dot(C * out.weights);
  return out;
}

// IPF in factor form: w_st = a_s b_t, alternately solving for a and b.
inline std::array<std::array<double, 3>, 2> ipf_factor_form(const std::array<std::array<int, 3>, 2>& n,
                                                            const std::array<double, 2>& rows,
                                                            const std::array<double, 3>& cols) {
  std::array<double, 2> a{1.0, 1.0};
  std::array<double, 3> b{1.0, 1.0, 1.0};
  for (int it = 0; it < 100000; ++it) {
    for (int s = 0; s < 2; ++s) {
      double d = 0.0;
      for (int t = 0; t < 3; ++t) d += b[t] * n[s][t];
      if (d > 0) a[s] = rows[s] / d;
    }
    double change = 0.0;
    for (int t = 0; t < 3; ++t) {
      double d = 0.0;
      for (int s = 0; s < 2; ++s) d += a[s] * n[s][t];
      if (d > 0) {
        const double nb = cols[t] / d;
        change = std::max(change, std::abs(nb - b[t]) / std::max(1.0, std::abs(nb)));
        b[t] = nb;
      }
    }
    if (change < 1e-15) break;
  }
  std::array<std::array<double, 3>, 2> w{};
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 3; ++t) w[s][t] = n[s][t] > 0 ? a[s] * b[t] : 0.0;
  return w;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace oracle
