#pragma once

// Generalized variance functions: log-linear models of the direct variance
// (or relative variance) on domain size, used to stabilise the variances of
// thinly sampled domains.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace harmonia {

enum class GvfResponse { variance, relvariance };
enum class PrecisionSpec { log_n, log_n_over_N, log_n_plus_log_N };

std::string to_string(GvfResponse r);
std::string to_string(PrecisionSpec p);

/// One domain with its direct estimate and variance.
struct GvfDomain {
  std::string area;
  int year = 0;
  double estimate = 0.0;    // Y hat
  double var_direct = 0.0;  // V hat
  int n = 0;
  double N = 0.0;
};

struct GvfMetrics {
  double rmse_log = 0.0;
  double reduction_upper = 0.0;
  double increase_share = 0.0;
  std::size_t excluded = 0;  // domains left out of the log terms
};

struct GvfModel {
  GvfResponse response = GvfResponse::variance;
  PrecisionSpec precision = PrecisionSpec::log_n;
  double alpha = 0.0;
  double beta = 0.0;  // log Y hat slope, variance response only
  double gamma1 = 0.0;
  double gamma2 = 0.0;  // log N slope, log_n_plus_log_N only
  std::map<std::string, double> area_effects;
  std::map<int, double> year_effects;
  std::size_t n_fit = 0;
  GvfMetrics metrics;

  std::string name() const;
};

inline constexpr std::size_t kGvfMinDomains = 10;
inline constexpr int kGvfMinSample = 3;

/// Least squares on the estimation sample (n >= 3, V > 0, Y > 0) with
/// sum-to-zero area and year effects. Throws gvf-unavailable with fewer than
/// 10 usable domains.
GvfModel fit_gvf(std::span<const GvfDomain> domains, GvfResponse response, PrecisionSpec precision);

struct GvfPrediction {
  std::optional<double> variance;  // nullopt: model not applicable
  bool degenerate = false;         // relvariance with Y hat = 0
};

/// Back-transformed prediction without bias correction. Unseen groups get a
/// zero effect.
GvfPrediction predict_variance(const GvfModel& model, const GvfDomain& domain);

double blend_weight(int n) noexcept;
double blend(double var_direct, double var_gvf, int n) noexcept;

/// RMSE of log direct vs log GVF, median final/direct ratio over the upper
/// quartile of direct variances, share of final/direct ratios above 1.05.
/// Non-positive variances are excluded from the log and ratio terms.
GvfMetrics selection_metrics(std::span<const double> direct, std::span<const double> gvf,
                             std::span<const double> blended);

/// Inclusive linear-interpolation quantile (type 7).
double quantile_inclusive(std::vector<double> values, double p);

/// Index of the winner: within (1 + tau) of the smallest RMSE, then lowest
/// reduction_upper, increase_share, rmse_log, then candidate order. Throws
/// gvf-unavailable when no candidate has a finite RMSE.
std::size_t select_model(std::span<const GvfModel> candidates, double tau = 0.05);

struct VarianceRow {
  std::string area;
  int year = 0;
  int n = 0;
  double var_direct = 0.0;
  std::optional<double> var_gvf;
  double var_final = 0.0;
  double weight = 0.0;  // blend weight actually applied
  bool degenerate = false;
};

struct CandidateRow {
  GvfResponse response;
  PrecisionSpec precision;
  bool available = false;
  std::string reason;
  std::optional<GvfModel> model;
};

struct GvfResult {
  std::optional<GvfModel> chosen;
  std::vector<CandidateRow> candidates;
  std::vector<VarianceRow> rows;  // input order
};

/// Fits all six candidates, scores each with its own blend, selects, and
/// returns the blended variance table. Without any usable candidate the
/// direct variances are kept.
GvfResult regularize_variances(std::span<const GvfDomain> domains, double tau = 0.05);

}  // namespace harmonia
