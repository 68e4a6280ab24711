#include "harmonia/variogram.hpp"

#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "harmonia/error.hpp"

namespace harmonia {

std::string ModelFamily::name() const {
  switch (family) {
    case Family::spherical: return "spherical";
    case Family::exponential: return "exponential";
    case Family::gaussian: return "gaussian";
    case Family::matern: return fmt::format("matern({})", nu);
  }
  return "unknown";
}

ModelFamily ModelFamily::parse(const std::string& name) {
  if (name == "spherical" || name == "Sph") return {Family::spherical, 0.5};
  if (name == "exponential" || name == "Exp") return {Family::exponential, 0.5};
  if (name == "gaussian" || name == "Gau") return {Family::gaussian, 0.5};
  if (name.rfind("matern", 0) == 0) {
    double nu = 1.5;
    if (name.size() > 6) {
      if (name[6] != '(' || name.back() != ')') throw Error(Errc::parse, "bad family name '" + name + "'");
      nu = std::stod(name.substr(7, name.size() - 8));
    }
    if (nu != 0.5 && nu != 1.5 && nu != 2.5) {
      throw Error(Errc::domain, fmt::format("matern smoothness {} has no closed form (use 0.5, 1.5 or 2.5)", nu));
    }
    return {Family::matern, nu};
  }
  throw Error(Errc::parse, "unknown covariance family '" + name + "'");
}

void VariogramSpec::validate() const {
  if (!(nugget >= 0.0) || !(partial_sill >= 0.0) || !(range > 0.0) || !std::isfinite(nugget) ||
      !std::isfinite(partial_sill) || !std::isfinite(range)) {
    throw Error(Errc::domain, fmt::format("invalid variogram c0={} c={} a={}", nugget, partial_sill, range));
  }
  if (model.family == Family::matern && model.nu != 0.5 && model.nu != 1.5 && model.nu != 2.5) {
    throw Error(Errc::domain, fmt::format("unsupported matern smoothness {}", model.nu));
  }
}

double correlation(const ModelFamily& model, double range, double h) {
  if (h < 0.0 || std::isnan(h)) throw Error(Errc::domain, "negative lag");
  if (h == 0.0) return 1.0;
  const double r = h / range;
  switch (model.family) {
    case Family::spherical: return r >= 1.0 ? 0.0 : 1.0 - 1.5 * r + 0.5 * r * r * r;
    case Family::exponential: return std::exp(-r);
    case Family::gaussian: return std::exp(-r * r);
    case Family::matern:
      if (model.nu == 0.5) return std::exp(-r);
      if (model.nu == 1.5) return (1.0 + r) * std::exp(-r);
      return (1.0 + r + r * r / 3.0) * std::exp(-r);
  }
  return 0.0;
}

double semivariance(const VariogramSpec& spec, double h) {
  if (h < 0.0 || std::isnan(h)) throw Error(Errc::domain, "negative lag");
  if (h == 0.0) return 0.0;
  return spec.nugget + spec.partial_sill * (1.0 - correlation(spec.model, spec.range, h));
}

double covariance(const VariogramSpec& spec, double h) {
  if (h < 0.0 || std::isnan(h)) throw Error(Errc::domain, "negative lag");
  if (h == 0.0) return spec.sill();
  return spec.partial_sill * correlation(spec.model, spec.range, h);
}

EmpiricalVariogram empirical_variogram(std::span<const Sample> samples, std::size_t n_lags, double cutoff) {
  if (samples.size() < 2) throw Error(Errc::insufficient_data, "empirical variogram needs at least 2 samples");
  if (n_lags == 0) throw Error(Errc::domain, "n_lags must be >= 1");
  if (!(cutoff > 0.0)) throw Error(Errc::domain, "cutoff must be positive");
  const double width = cutoff / static_cast<double>(n_lags);
  std::vector<double> dist_sum(n_lags, 0.0);
  std::vector<double> sq_sum(n_lags, 0.0);
  std::vector<std::size_t> count(n_lags, 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t k = i + 1; k < samples.size(); ++k) {
      const double d = distance(samples[i].location, samples[k].location);
      if (d > cutoff) continue;
      const std::size_t bin = std::min(static_cast<std::size_t>(d / width), n_lags - 1);
      const double diff = samples[i].value - samples[k].value;
      dist_sum[bin] += d;
      sq_sum[bin] += diff * diff;
      ++count[bin];
    }
  }
  EmpiricalVariogram emp;
  for (std::size_t b = 0; b < n_lags; ++b) {
    if (count[b] == 0) continue;
    const double n = static_cast<double>(count[b]);
    emp.bins.push_back({dist_sum[b] / n, sq_sum[b] / (2.0 * n), count[b]});
  }
  if (emp.bins.empty()) throw Error(Errc::empty_variogram, "no sample pair within the cutoff");
  return emp;
}

EmpiricalVariogram empirical_variogram(const GridFieldSnapshot& field, std::size_t n_lags, double cutoff) {
  return empirical_variogram(field.samples, n_lags, cutoff);
}

double bounding_diagonal(std::span<const Sample> samples) {
  if (samples.empty()) return 0.0;
  double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
  for (const auto& s : samples) {
    x0 = std::min(x0, s.location.x);
    y0 = std::min(y0, s.location.y);
    x1 = std::max(x1, s.location.x);
    y1 = std::max(y1, s.location.y);
  }
  return std::hypot(x1 - x0, y1 - y0);
}

double sample_variance(std::span<const Sample> samples) {
  if (samples.size() < 2) return 0.0;
  double mean = 0.0;
  for (const auto& s : samples) mean += s.value;
  mean /= static_cast<double>(samples.size());
  double ss = 0.0;
  for (const auto& s : samples) ss += (s.value - mean) * (s.value - mean);
  return ss / static_cast<double>(samples.size() - 1);
}

double wls_objective(const EmpiricalVariogram& emp, const VariogramSpec& spec) {
  double total = 0.0;
  for (const auto& bin : emp.bins) {
    const double w = static_cast<double>(bin.pairs) / (bin.distance * bin.distance);
    const double r = bin.gamma - semivariance(spec, bin.distance);
    total += w * r * r;
  }
  return total;
}

namespace {

struct LinearFit {
  double nugget = 0.0;
  double partial_sill = 0.0;
  double objective = INFINITY;
};

// For a fixed range the model is c0 + c * f_j; minimise the weighted squares
// over c0, c >= 0 by checking the interior solution and both boundary faces.
LinearFit fit_sills(const EmpiricalVariogram& emp, const ModelFamily& model, double range) {
  const std::size_t m = emp.bins.size();
  std::vector<double> w(m), f(m), g(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& bin = emp.bins[j];
    w[j] = static_cast<double>(bin.pairs) / (bin.distance * bin.distance);
    f[j] = 1.0 - correlation(model, range, bin.distance);
    g[j] = bin.gamma;
  }
  auto objective = [&](double c0, double c) {
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double r = g[j] - c0 - c * f[j];
      total += w[j] * r * r;
    }
    return total;
  };
  double sw = 0, swf = 0, swff = 0, swg = 0, swfg = 0;
  for (std::size_t j = 0; j < m; ++j) {
    sw += w[j];
    swf += w[j] * f[j];
    swff += w[j] * f[j] * f[j];
    swg += w[j] * g[j];
    swfg += w[j] * f[j] * g[j];
  }

  LinearFit best{0.0, 0.0, objective(0.0, 0.0)};
  auto consider = [&](double c0, double c) {
    if (!(c0 >= 0.0) || !(c >= 0.0) || !std::isfinite(c0) || !std::isfinite(c)) return;
    const double obj = objective(c0, c);
    if (obj < best.objective) best = {c0, c, obj};
  };
  const double det = sw * swff - swf * swf;
  if (std::abs(det) > 1e-12 * sw * swff) {
    consider((swff * swg - swf * swfg) / det, (sw * swfg - swf * swg) / det);
  }
  if (swff > 0.0) consider(0.0, swfg / swff);
  if (sw > 0.0) consider(swg / sw, 0.0);
  return best;
}

}  // namespace

VariogramSpec fit_variogram(const EmpiricalVariogram& emp, const ModelFamily& model, double data_variance,
                            double max_distance) {
  if (emp.bins.size() < 3) {
    throw Error(Errc::insufficient_data, fmt::format("variogram fit needs >= 3 bins, got {}", emp.bins.size()));
  }
  double h_min = INFINITY, h_max = 0.0;
  for (const auto& bin : emp.bins) {
    if (!(bin.distance > 0.0) || !std::isfinite(bin.gamma)) throw Error(Errc::fit_failure, "degenerate variogram bin");
    h_min = std::min(h_min, bin.distance);
    h_max = std::max(h_max, bin.distance);
  }
  if (!std::isfinite(data_variance) || !(max_distance > 0.0) || !std::isfinite(max_distance)) {
    throw Error(Errc::fit_failure, "non-finite fit initialisation");
  }

  const VariogramSpec start{model, 0.0, std::max(data_variance, 0.0), max_distance / 3.0};
  const double start_objective = wls_objective(emp, start);

  auto profile = [&](double log_range) { return fit_sills(emp, model, std::exp(log_range)).objective; };

  const double lo = std::log(h_min / 10.0);
  const double hi = std::log(std::max(h_max, max_distance) * 10.0);
  constexpr int grid = 121;
  std::array<double, grid> values{};
  int best_i = 0;
  for (int i = 0; i < grid; ++i) {
    values[i] = profile(lo + (hi - lo) * i / (grid - 1));
    if (values[i] < values[best_i]) best_i = i;
  }

  // Golden-section refinement between the neighbours of the best grid node.
  double a = lo + (hi - lo) * std::max(best_i - 1, 0) / (grid - 1);
  double b = lo + (hi - lo) * std::min(best_i + 1, grid - 1) / (grid - 1);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = profile(x1);
  double f2 = profile(x2);
  for (int it = 0; it < 100; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = profile(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = profile(x2);
    }
  }
  double log_range = lo + (hi - lo) * best_i / (grid - 1);
  if (std::min(f1, f2) < values[best_i]) log_range = f1 <= f2 ? x1 : x2;

  const double range = std::exp(log_range);
  const LinearFit sills = fit_sills(emp, model, range);
  if (!std::isfinite(sills.objective)) throw Error(Errc::fit_failure, "non-finite variogram objective");

  VariogramSpec fitted{model, sills.nugget, sills.partial_sill, range};
  if (fitted.partial_sill == 0.0) fitted.range = start.range;
  if (std::isfinite(start_objective) && start_objective < wls_objective(emp, fitted)) return start;
  return fitted;
}

}  // namespace harmonia
