#pragma once

// Ordinary point and block kriging with a constant unknown mean.
//
// The system solved is
//   [ C   1 ] [ alpha  ]   [ c_V ]
//   [ 1'  0 ] [ lambda ] = [ 1   ]
// so that C alpha + lambda 1 = c_V. Under this sign convention the prediction
// error variance is C(V,V) - alpha' c_V - lambda.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "harmonia/geom.hpp"
#include "harmonia/variogram.hpp"

namespace harmonia {

struct KrigingSystem {
  Eigen::MatrixXd C;         // covariances among the neighbours
  Eigen::VectorXd c_target;  // neighbour-to-target covariances
  Eigen::VectorXd weights;
  double lagrange = 0.0;
};

/// Solves the augmented system with a fully pivoted LU and one step of
/// iterative refinement. Throws singular-system if the augmented matrix is
/// rank deficient or the weights fail to sum to one within 1e-10.
void solve_ordinary_kriging(KrigingSystem& system);

/// C(s, V): mean of the point covariances between s and the block points.
double point_to_block_cov(const VariogramSpec& spec, const Point& s, std::span<const Point> block_points);

/// C(V, V): mean over all ordered pairs of block points, diagonal included.
double block_to_block_cov(const VariogramSpec& spec, std::span<const Point> block_points);

struct KrigingEstimate {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t n_used = 0;
  bool jittered = false;
};

/// Local ordinary kriging of the mean over a discretised block. Neighbours are
/// the nmax samples closest to the centroid of the block points. Retries once
/// with a diagonal jitter of 1e-10 times the sill when the system is singular.
KrigingEstimate krige_block(std::span<const Sample> samples, std::span<const Point> block_points,
                            const VariogramSpec& spec, std::size_t nmax);

/// Point kriging is block kriging over a single point.
KrigingEstimate krige_point(std::span<const Sample> samples, const Point& target, const VariogramSpec& spec,
                            std::size_t nmax);

struct BlockPrediction {
  std::string area_id;
  double mean = 0.0;
  double variance = 0.0;
  std::size_t n_used = 0;
  std::string family;
  std::size_t nmax = 0;
  double cv_rmse = 0.0;
  std::optional<std::string> error;  // set when the area could not be predicted
};

/// Block kriging of one area. A spacing of 0 selects sqrt(area) / 4.
BlockPrediction predict_block(const GridFieldSnapshot& field, const AreaUnit& area, const VariogramSpec& spec,
                              std::size_t nmax, double spacing);

double default_block_spacing(const AreaUnit& area);

}  // namespace harmonia
