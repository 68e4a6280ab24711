#include "harmonia/gvf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "harmonia/error.hpp"

namespace harmonia {

std::string to_string(GvfResponse r) { return r == GvfResponse::variance ? "variance" : "relvariance"; }

std::string to_string(PrecisionSpec p) {
  switch (p) {
    case PrecisionSpec::log_n: return "log_n";
    case PrecisionSpec::log_n_over_N: return "log_n_over_N";
    case PrecisionSpec::log_n_plus_log_N: return "log_n_plus_log_N";
  }
  return "log_n";
}

std::string GvfModel::name() const { return to_string(response) + "/" + to_string(precision); }

namespace {

std::vector<double> precision_terms(PrecisionSpec p, const GvfDomain& d) {
  const double ln = std::log(static_cast<double>(d.n));
  switch (p) {
    case PrecisionSpec::log_n: return {ln};
    case PrecisionSpec::log_n_over_N: return {ln - std::log(d.N)};
    case PrecisionSpec::log_n_plus_log_N: return {ln, std::log(d.N)};
  }
  return {ln};
}

template <typename Key>
std::vector<Key> levels_of(const std::vector<Key>& keys) {
  std::vector<Key> out = keys;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Sum-to-zero coding: level k < L-1 gets +1 in column k, the last level -1
// in every column.
template <typename Key>
void effects_columns(Eigen::MatrixXd& X, Eigen::Index first, const std::vector<Key>& keys,
                     const std::vector<Key>& levels) {
  const Eigen::Index L = static_cast<Eigen::Index>(levels.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto k = std::lower_bound(levels.begin(), levels.end(), keys[i]) - levels.begin();
    for (Eigen::Index j = 0; j + 1 < L; ++j) {
      X(static_cast<Eigen::Index>(i), first + j) = (k == j) ? 1.0 : (k == L - 1 ? -1.0 : 0.0);
    }
  }
}

template <typename Key>
std::map<Key, double> effects_from(const Eigen::VectorXd& coef, Eigen::Index first, const std::vector<Key>& levels) {
  std::map<Key, double> out;
  double last = 0.0;
  for (std::size_t j = 0; j + 1 < levels.size(); ++j) {
    const double e = coef(first + static_cast<Eigen::Index>(j));
    out[levels[j]] = e;
    last -= e;
  }
  if (!levels.empty()) out[levels.back()] = last;
  return out;
}

}  // namespace

GvfModel fit_gvf(std::span<const GvfDomain> domains, GvfResponse response, PrecisionSpec precision) {
  std::vector<const GvfDomain*> sample;
  for (const auto& d : domains) {
    if (d.n >= kGvfMinSample && d.var_direct > 0.0 && d.estimate > 0.0 && d.N >= d.n && std::isfinite(d.var_direct) &&
        std::isfinite(d.estimate)) {
      sample.push_back(&d);
    }
  }
  if (sample.size() < kGvfMinDomains) {
    throw Error(Errc::gvf_unavailable,
                fmt::format("{} usable domains, need at least {}", sample.size(), kGvfMinDomains));
  }

  std::vector<std::string> areas;
  std::vector<int> years;
  for (const auto* d : sample) {
    areas.push_back(d->area);
    years.push_back(d->year);
  }
  const auto area_levels = levels_of(areas);
  const auto year_levels = levels_of(years);

  const Eigen::Index n_prec = precision == PrecisionSpec::log_n_plus_log_N ? 2 : 1;
  const Eigen::Index n_beta = response == GvfResponse::variance ? 1 : 0;
  const Eigen::Index col_prec = 1 + n_beta;
  const Eigen::Index col_area = col_prec + n_prec;
  const Eigen::Index col_year = col_area + static_cast<Eigen::Index>(area_levels.size()) - 1;
  const Eigen::Index p = col_year + static_cast<Eigen::Index>(year_levels.size()) - 1;
  const Eigen::Index m = static_cast<Eigen::Index>(sample.size());

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(m, p);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& d = *sample[static_cast<std::size_t>(i)];
    X(i, 0) = 1.0;
    if (n_beta) X(i, 1) = std::log(d.estimate);
    const auto g = precision_terms(precision, d);
    for (Eigen::Index j = 0; j < n_prec; ++j) X(i, col_prec + j) = g[static_cast<std::size_t>(j)];
    y(i) = response == GvfResponse::variance ? std::log(d.var_direct)
                                             : std::log(d.var_direct) - 2.0 * std::log(d.estimate);
  }
  effects_columns(X, col_area, areas, area_levels);
  effects_columns(X, col_year, years, year_levels);

  const Eigen::VectorXd coef = X.completeOrthogonalDecomposition().solve(y);
  if (!coef.allFinite()) throw Error(Errc::gvf_unavailable, "non-finite GVF coefficients");

  GvfModel model;
  model.response = response;
  model.precision = precision;
  model.alpha = coef(0);
  if (n_beta) model.beta = coef(1);
  model.gamma1 = coef(col_prec);
  if (n_prec == 2) model.gamma2 = coef(col_prec + 1);
  model.area_effects = effects_from(coef, col_area, area_levels);
  model.year_effects = effects_from(coef, col_year, year_levels);
  model.n_fit = sample.size();
  return model;
}

GvfPrediction predict_variance(const GvfModel& model, const GvfDomain& domain) {
  GvfPrediction out;
  if (domain.n < 1 || !(domain.N >= domain.n)) return out;
  double eta = model.alpha;
  if (model.response == GvfResponse::variance) {
    if (!(domain.estimate > 0.0)) return out;
    eta += model.beta * std::log(domain.estimate);
  }
  const auto g = precision_terms(model.precision, domain);
  eta += model.gamma1 * g[0];
  if (g.size() > 1) eta += model.gamma2 * g[1];
  if (auto it = model.area_effects.find(domain.area); it != model.area_effects.end()) eta += it->second;
  if (auto it = model.year_effects.find(domain.year); it != model.year_effects.end()) eta += it->second;

  const double level = std::exp(eta);
  if (model.response == GvfResponse::variance) {
    out.variance = level;
  } else if (domain.estimate == 0.0) {
    out.variance = 0.0;
    out.degenerate = true;
  } else {
    out.variance = level * domain.estimate * domain.estimate;
  }
  if (!std::isfinite(*out.variance)) out.variance.reset();
  return out;
}

double blend_weight(int n) noexcept {
  if (n <= 1) return 1.0;
  if (n == 2) return 0.5;
  return 0.0;
}

double blend(double var_direct, double var_gvf, int n) noexcept {
  const double w = blend_weight(n);
  if (w == 1.0) return var_gvf;
  if (w == 0.0) return var_direct;
  return w * var_gvf + (1.0 - w) * var_direct;
}

double quantile_inclusive(std::vector<double> values, double p) {
  if (values.empty()) throw Error(Errc::empty_input, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

GvfMetrics selection_metrics(std::span<const double> direct, std::span<const double> gvf,
                             std::span<const double> blended) {
  if (direct.size() != gvf.size() || direct.size() != blended.size()) {
    throw Error(Errc::domain, "selection metrics need aligned variance lists");
  }
  GvfMetrics m;
  double ss = 0.0;
  std::size_t n_log = 0;
  std::vector<double> positive;
  for (std::size_t i = 0; i < direct.size(); ++i) {
    if (direct[i] > 0.0 && gvf[i] > 0.0) {
      const double d = std::log(direct[i]) - std::log(gvf[i]);
      ss += d * d;
      ++n_log;
    } else {
      ++m.excluded;
    }
    if (direct[i] > 0.0) positive.push_back(direct[i]);
  }
  m.rmse_log = n_log ? std::sqrt(ss / static_cast<double>(n_log)) : std::numeric_limits<double>::infinity();
  if (positive.empty()) {
    m.reduction_upper = std::numeric_limits<double>::infinity();
    m.increase_share = std::numeric_limits<double>::infinity();
    return m;
  }

  const double q75 = quantile_inclusive(positive, 0.75);
  std::vector<double> upper;
  std::size_t increased = 0;
  for (std::size_t i = 0; i < direct.size(); ++i) {
    if (!(direct[i] > 0.0)) continue;
    const double ratio = blended[i] / direct[i];
    if (ratio > 1.05) ++increased;
    if (direct[i] >= q75) upper.push_back(ratio);
  }
  m.reduction_upper = quantile_inclusive(upper, 0.5);
  m.increase_share = static_cast<double>(increased) / static_cast<double>(positive.size());
  return m;
}

std::size_t select_model(std::span<const GvfModel> candidates, double tau) {
  double best_rmse = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    if (std::isfinite(c.metrics.rmse_log)) best_rmse = std::min(best_rmse, c.metrics.rmse_log);
  }
  if (!std::isfinite(best_rmse)) throw Error(Errc::gvf_unavailable, "no GVF candidate with a finite RMSE");

  auto key = [](const GvfMetrics& m) {
    auto finite_or_inf = [](double v) { return std::isnan(v) ? std::numeric_limits<double>::infinity() : v; };
    return std::tuple{finite_or_inf(m.reduction_upper), finite_or_inf(m.increase_share), m.rmse_log};
  };
  std::optional<std::size_t> winner;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& m = candidates[i].metrics;
    if (!std::isfinite(m.rmse_log) || m.rmse_log > best_rmse * (1.0 + tau)) continue;
    if (!winner || key(m) < key(candidates[*winner].metrics)) winner = i;
  }
  return *winner;
}

GvfResult regularize_variances(std::span<const GvfDomain> domains, double tau) {
  GvfResult result;
  std::vector<GvfModel> fitted;
  std::vector<std::vector<GvfPrediction>> predictions;

  for (auto response : {GvfResponse::variance, GvfResponse::relvariance}) {
    for (auto precision : {PrecisionSpec::log_n, PrecisionSpec::log_n_over_N, PrecisionSpec::log_n_plus_log_N}) {
      CandidateRow row{response, precision, false, {}, std::nullopt};
      try {
        GvfModel model = fit_gvf(domains, response, precision);
        std::vector<double> direct, gvf, blended;
        std::vector<GvfPrediction> preds;
        for (const auto& d : domains) {
          preds.push_back(predict_variance(model, d));
          if (!preds.back().variance) continue;
          direct.push_back(d.var_direct);
          gvf.push_back(*preds.back().variance);
          blended.push_back(blend(d.var_direct, *preds.back().variance, d.n));
        }
        model.metrics = selection_metrics(direct, gvf, blended);
        row.available = true;
        row.model = model;
        fitted.push_back(std::move(model));
        predictions.push_back(std::move(preds));
      } catch (const Error& e) {
        if (e.code() != Errc::gvf_unavailable) throw;
        row.reason = e.what();
      }
      result.candidates.push_back(std::move(row));
    }
  }

  std::optional<std::size_t> winner;
  if (!fitted.empty()) {
    try {
      winner = select_model(fitted, tau);
    } catch (const Error& e) {
      if (e.code() != Errc::gvf_unavailable) throw;
    }
  }
  if (winner) result.chosen = fitted[*winner];

  for (std::size_t i = 0; i < domains.size(); ++i) {
    const auto& d = domains[i];
    VarianceRow row;
    row.area = d.area;
    row.year = d.year;
    row.n = d.n;
    row.var_direct = d.var_direct;
    row.var_final = d.var_direct;
    if (winner) {
      const auto& pred = predictions[*winner][i];
      row.var_gvf = pred.variance;
      row.degenerate = pred.degenerate;
      if (pred.variance) {
        row.weight = blend_weight(d.n);
        row.var_final = blend(d.var_direct, *pred.variance, d.n);
      }
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace harmonia
