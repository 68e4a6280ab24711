#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "harmonia/geom.hpp"

namespace harmonia {

enum class Family { spherical, exponential, gaussian, matern };

/// A covariance family together with its Matern smoothness (ignored for the
/// other families). Matern is restricted to the closed forms nu in {0.5, 1.5, 2.5}.
struct ModelFamily {
  Family family = Family::exponential;
  double nu = 0.5;

  /// "spherical", "exponential", "gaussian" or "matern(1.5)".
  std::string name() const;
  static ModelFamily parse(const std::string& name);

  friend bool operator==(const ModelFamily&, const ModelFamily&) = default;
};

struct VariogramSpec {
  ModelFamily model;
  double nugget = 0.0;
  double partial_sill = 1.0;
  double range = 1.0;

  double sill() const noexcept { return nugget + partial_sill; }
  /// No spatial structure left: kriging degenerates to a local mean.
  bool pure_nugget() const noexcept { return partial_sill <= 1e-12 * std::max(sill(), 1e-300); }
  /// Throws domain on negative sills, non-positive range or unsupported nu.
  void validate() const;
};

/// Correlation of the structured component at lag h (1 at h = 0).
double correlation(const ModelFamily& model, double range, double h);

double semivariance(const VariogramSpec& spec, double h);
double covariance(const VariogramSpec& spec, double h);

struct VariogramBin {
  double distance = 0.0;
  double gamma = 0.0;
  std::size_t pairs = 0;
};

struct EmpiricalVariogram {
  std::vector<VariogramBin> bins;
};

/// Matheron estimator over pairs with distance <= cutoff in n_lags equal-width
/// lags; empty bins are dropped. Throws empty-variogram if no pair qualifies.
EmpiricalVariogram empirical_variogram(const GridFieldSnapshot& field, std::size_t n_lags, double cutoff);
EmpiricalVariogram empirical_variogram(std::span<const Sample> samples, std::size_t n_lags, double cutoff);

/// Diagonal of the bounding box of the sample locations.
double bounding_diagonal(std::span<const Sample> samples);

/// Sample variance (n-1) of the sample values; 0 for a single sample.
double sample_variance(std::span<const Sample> samples);

/// Weighted least-squares objective sum N_j / h_j^2 (gamma_j - model(h_j))^2.
double wls_objective(const EmpiricalVariogram& emp, const VariogramSpec& spec);

/// Fits (nugget, partial sill, range) by WLS with c0, c >= 0 and a > 0.
/// For a fixed range the problem is a two-variable non-negative least squares,
/// solved exactly; the range is searched on a log grid and refined by golden
/// section. Never returns a spec worse than the start (0, data_variance,
/// max_distance / 3).
VariogramSpec fit_variogram(const EmpiricalVariogram& emp, const ModelFamily& model, double data_variance,
                            double max_distance);

}  // namespace harmonia
