#include "harmonia/kriging.hpp"

#include <cmath>

#include <fmt/format.h>

#include "harmonia/error.hpp"

namespace harmonia {

void solve_ordinary_kriging(KrigingSystem& system) {
  const Eigen::Index n = system.C.rows();
  if (n == 0 || system.C.cols() != n || system.c_target.size() != n) {
    throw Error(Errc::empty_input, "kriging system has no neighbours or mismatched sizes");
  }
  Eigen::MatrixXd A(n + 1, n + 1);
  A.topLeftCorner(n, n) = system.C;
  A.topRightCorner(n, 1).setOnes();
  A.bottomLeftCorner(1, n).setOnes();
  A(n, n) = 0.0;
  Eigen::VectorXd rhs(n + 1);
  rhs.head(n) = system.c_target;
  rhs(n) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (lu.rank() < n + 1) throw Error(Errc::singular_system, fmt::format("rank {} < {}", lu.rank(), n + 1));
  Eigen::VectorXd x = lu.solve(rhs);
  x += lu.solve(rhs - A * x);
  if (!x.allFinite()) throw Error(Errc::singular_system, "non-finite kriging weights");

  system.weights = x.head(n);
  system.lagrange = x(n);
  const double excess = system.weights.sum() - 1.0;
  if (std::abs(excess) > 1e-10) {
    throw Error(Errc::singular_system, fmt::format("weights sum to 1{:+.3e}", excess));
  }
}

double point_to_block_cov(const VariogramSpec& spec, const Point& s, std::span<const Point> block_points) {
  if (block_points.empty()) throw Error(Errc::empty_input, "block has no discretisation points");
  double total = 0.0;
  for (const auto& u : block_points) total += covariance(spec, distance(s, u));
  return total / static_cast<double>(block_points.size());
}

double block_to_block_cov(const VariogramSpec& spec, std::span<const Point> block_points) {
  if (block_points.empty()) throw Error(Errc::empty_input, "block has no discretisation points");
  const std::size_t m = block_points.size();
  // Symmetric: off-diagonal pairs counted twice.
  double off = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) off += covariance(spec, distance(block_points[i], block_points[j]));
  }
  const double total = 2.0 * off + static_cast<double>(m) * spec.sill();
  return total / static_cast<double>(m * m);
}

KrigingEstimate krige_block(std::span<const Sample> samples, std::span<const Point> block_points,
                            const VariogramSpec& spec, std::size_t nmax) {
  if (samples.empty()) throw Error(Errc::empty_input, "kriging with no samples");
  if (block_points.empty()) throw Error(Errc::empty_input, "block has no discretisation points");
  if (nmax == 0) throw Error(Errc::domain, "nmax must be >= 1");

  std::vector<Point> locations;
  locations.reserve(samples.size());
  for (const auto& s : samples) locations.push_back(s.location);
  const auto neighbours = knn(locations, centroid(block_points), nmax);
  const auto n = static_cast<Eigen::Index>(neighbours.size());

  KrigingSystem system;
  system.C.resize(n, n);
  system.c_target.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point& si = locations[neighbours[i]];
    system.C(i, i) = spec.sill();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double c = covariance(spec, distance(si, locations[neighbours[j]]));
      system.C(i, j) = c;
      system.C(j, i) = c;
    }
    system.c_target(i) = point_to_block_cov(spec, si, block_points);
  }

  KrigingEstimate est;
  try {
    solve_ordinary_kriging(system);
  } catch (const Error& e) {
    if (e.code() != Errc::singular_system) throw;
    const double jitter = 1e-10 * (spec.sill() > 0.0 ? spec.sill() : 1.0);
    system.C.diagonal().array() += jitter;
    solve_ordinary_kriging(system);
    est.jittered = true;
  }

  // Offsets from one neighbour: same value since the weights sum to one, and
  // a constant field comes back exactly.
  const double anchor = samples[neighbours[0]].value;
  double offset = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) offset += system.weights(i) * (samples[neighbours[i]].value - anchor);
  est.mean = anchor + offset;
  const double cvv = block_points.size() == 1 ? spec.sill() : block_to_block_cov(spec, block_points);
  double variance = cvv - system.weights.dot(system.c_target) - system.lagrange;
  const double tol = 1e-9 * std::max(1.0, spec.sill());
  if (variance < 0.0) {
    if (variance < -tol) {
      throw Error(Errc::numerical_failure, fmt::format("negative kriging variance {:.6e}", variance));
    }
    variance = 0.0;
  }
  est.variance = variance;
  est.n_used = neighbours.size();
  return est;
}

KrigingEstimate krige_point(std::span<const Sample> samples, const Point& target, const VariogramSpec& spec,
                            std::size_t nmax) {
  const Point block[1] = {target};
  return krige_block(samples, block, spec, nmax);
}

double default_block_spacing(const AreaUnit& area) { return std::sqrt(area.area()) / 4.0; }

BlockPrediction predict_block(const GridFieldSnapshot& field, const AreaUnit& area, const VariogramSpec& spec,
                              std::size_t nmax, double spacing) {
  if (field.samples.empty()) throw Error(Errc::empty_input, "field has no samples");
  const auto block = discretize_block(area, spacing > 0.0 ? spacing : default_block_spacing(area));
  const auto est = krige_block(field.samples, block, spec, nmax);
  BlockPrediction out;
  out.area_id = area.id();
  out.mean = est.mean;
  out.variance = est.variance;
  out.n_used = est.n_used;
  out.family = spec.model.name();
  out.nmax = nmax;
  return out;
}

}  // namespace harmonia
