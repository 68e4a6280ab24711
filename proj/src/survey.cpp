#include "harmonia/survey.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "harmonia/error.hpp"

namespace harmonia {

std::optional<SizeClass> size_class_from_standard_output(double standard_output) {
  if (!(standard_output >= kSurveyFloorStandardOutput)) return std::nullopt;
  return standard_output < kLargeFarmStandardOutput ? SizeClass::small : SizeClass::large;
}

SizeClass parse_size_class(const std::string& text) {
  if (text == "small" || text == "1") return SizeClass::small;
  if (text == "large" || text == "2") return SizeClass::large;
  throw Error(Errc::parse, "unknown size class '" + text + "'");
}

SpecClass parse_spec_class(const std::string& text) {
  if (text == "crop" || text == "1") return SpecClass::crop;
  if (text == "livestock" || text == "2") return SpecClass::livestock;
  if (text == "mixed" || text == "3") return SpecClass::mixed;
  throw Error(Errc::parse, "unknown specialisation class '" + text + "'");
}

std::string_view to_string(SizeClass s) noexcept { return s == SizeClass::small ? "small" : "large"; }

std::string_view to_string(SpecClass t) noexcept {
  switch (t) {
    case SpecClass::crop: return "crop";
    case SpecClass::livestock: return "livestock";
    case SpecClass::mixed: return "mixed";
  }
  return "crop";
}

std::string_view to_string(WeightMethod m) noexcept {
  switch (m) {
    case WeightMethod::cell: return "cell";
    case WeightMethod::rake2d: return "rake2d";
    case WeightMethod::rake1d_size: return "rake1d_size";
    case WeightMethod::rake1d_spec: return "rake1d_spec";
    case WeightMethod::donor: return "donor";
    case WeightMethod::uniform: return "uniform";
  }
  return "uniform";
}

WeightMethod parse_weight_method(std::string_view text) {
  for (auto m : {WeightMethod::cell, WeightMethod::rake2d, WeightMethod::rake1d_size, WeightMethod::rake1d_spec,
                 WeightMethod::donor, WeightMethod::uniform}) {
    if (to_string(m) == text) return m;
  }
  throw Error(Errc::parse, fmt::format("unknown weighting method '{}'", text));
}

double grid_total(const StratumGrid& g) noexcept {
  double t = 0.0;
  for (const auto& row : g)
    for (double v : row) t += v;
  return t;
}

int grid_total(const CountGrid& g) noexcept {
  int t = 0;
  for (const auto& row : g)
    for (int v : row) t += v;
  return t;
}

std::array<double, 2> row_margins(const StratumGrid& g) noexcept {
  return {g[0][0] + g[0][1] + g[0][2], g[1][0] + g[1][1] + g[1][2]};
}

std::array<double, 3> col_margins(const StratumGrid& g) noexcept {
  return {g[0][0] + g[1][0], g[0][1] + g[1][1], g[0][2] + g[1][2]};
}

double interpolate_population(double n2010, double n2020, int year) {
  if (year < 2011 || year > 2023) throw Error(Errc::domain, fmt::format("year {} outside 2011-2023", year));
  if (!(n2010 >= 0.0) || !(n2020 >= 0.0)) throw Error(Errc::domain, "negative census count");
  if (year >= 2020) return n2020;
  return std::max(0.0, n2010 + (n2020 - n2010) * (year - 2010) / 10.0);
}

StratumGrid reconstruct_population(const StratumGrid& census2010, const StratumGrid& census2020, int year) {
  const double t2010 = grid_total(census2010);
  const double t2020 = grid_total(census2020);
  const double total = interpolate_population(t2010, t2020, year);
  const bool prefer_2020 = std::abs(year - 2020) <= std::abs(year - 2010);
  const StratumGrid* base = prefer_2020 ? &census2020 : &census2010;
  double base_total = prefer_2020 ? t2020 : t2010;
  if (base_total <= 0.0) {
    base = prefer_2020 ? &census2010 : &census2020;
    base_total = prefer_2020 ? t2010 : t2020;
  }
  StratumGrid out{};
  if (base_total <= 0.0) return out;
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 3; ++t) out[s][t] = total * (*base)[s][t] / base_total;
  return out;
}

namespace {

template <std::size_t K>
void check_support(const std::array<double, K>& margins, const std::array<int, K>& support, const char* axis) {
  for (std::size_t k = 0; k < K; ++k) {
    if ((margins[k] > 0.0 && support[k] == 0) || (margins[k] <= 0.0 && support[k] > 0)) {
      throw Error(Errc::infeasible_support,
                  fmt::format("{} margin {} = {} with {} sampled farms", axis, k, margins[k], support[k]));
    }
  }
}

std::array<int, 2> row_support(const CountGrid& n) { return {n[0][0] + n[0][1] + n[0][2], n[1][0] + n[1][1] + n[1][2]}; }
std::array<int, 3> col_support(const CountGrid& n) { return {n[0][0] + n[1][0], n[0][1] + n[1][1], n[0][2] + n[1][2]}; }

}  // namespace

RakeResult rake_2d(const CountGrid& n, const std::array<double, 2>& size_margins,
                   const std::array<double, 3>& spec_margins, double tol, int max_iter) {
  const double rows = size_margins[0] + size_margins[1];
  const double cols = spec_margins[0] + spec_margins[1] + spec_margins[2];
  if (std::abs(rows - cols) > 1e-6 * std::max({std::abs(rows), std::abs(cols), 1e-300})) {
    throw Error(Errc::margin_mismatch, fmt::format("size margins sum to {}, specialisation margins to {}", rows, cols));
  }
  check_support(size_margins, row_support(n), "size");
  check_support(spec_margins, col_support(n), "specialisation");

  RakeResult r;
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 3; ++t) r.weights[s][t] = n[s][t] > 0 ? 1.0 : 0.0;

  auto weighted = [&](int s, int t) { return r.weights[s][t] * n[s][t]; };
  for (r.iterations = 1; r.iterations <= max_iter; ++r.iterations) {
    for (int s = 0; s < 2; ++s) {
      const double current = weighted(s, 0) + weighted(s, 1) + weighted(s, 2);
      if (current <= 0.0) continue;
      for (int t = 0; t < 3; ++t) r.weights[s][t] = r.weights[s][t] * size_margins[s] / current;
    }
    for (int t = 0; t < 3; ++t) {
      const double current = weighted(0, t) + weighted(1, t);
      if (current <= 0.0) continue;
      for (int s = 0; s < 2; ++s) r.weights[s][t] = r.weights[s][t] * spec_margins[t] / current;
    }
    r.residual = 0.0;
    for (int s = 0; s < 2; ++s) {
      r.residual = std::max(r.residual, std::abs(weighted(s, 0) + weighted(s, 1) + weighted(s, 2) - size_margins[s]));
    }
    for (int t = 0; t < 3; ++t) {
      r.residual = std::max(r.residual, std::abs(weighted(0, t) + weighted(1, t) - spec_margins[t]));
    }
    if (r.residual < tol) return r;
  }
  throw Error(Errc::rake_divergence, fmt::format("no convergence after {} sweeps (residual {:.3e})", max_iter, r.residual));
}

StratumGrid calibrate_axis(const CountGrid& n, std::span<const double> margins, Axis axis) {
  StratumGrid w{};
  if (axis == Axis::size) {
    if (margins.size() != 2) throw Error(Errc::domain, "size calibration needs 2 margins");
    const auto support = row_support(n);
    check_support(std::array<double, 2>{margins[0], margins[1]}, support, "size");
    for (int s = 0; s < 2; ++s)
      for (int t = 0; t < 3; ++t)
        if (n[s][t] > 0) w[s][t] = margins[s] / support[s];
  } else {
    if (margins.size() != 3) throw Error(Errc::domain, "specialisation calibration needs 3 margins");
    const auto support = col_support(n);
    check_support(std::array<double, 3>{margins[0], margins[1], margins[2]}, support, "specialisation");
    for (int s = 0; s < 2; ++s)
      for (int t = 0; t < 3; ++t)
        if (n[s][t] > 0) w[s][t] = margins[t] / support[t];
  }
  return w;
}

std::optional<Calibration1d> calibrate_1d(const CountGrid& n, const StratumGrid& population) {
  std::optional<Calibration1d> best;
  for (Axis axis : {Axis::size, Axis::spec}) {
    StratumGrid w;
    try {
      if (axis == Axis::size) {
        const auto m = row_margins(population);
        w = calibrate_axis(n, m, axis);
      } else {
        const auto m = col_margins(population);
        w = calibrate_axis(n, m, axis);
      }
    } catch (const Error& e) {
      if (e.code() != Errc::infeasible_support) throw;
      continue;
    }
    double deviation = 0.0;
    for (int s = 0; s < 2; ++s)
      for (int t = 0; t < 3; ++t) deviation = std::max(deviation, std::abs(w[s][t] * n[s][t] - population[s][t]));
    if (!best || deviation < best->max_deviation) best = Calibration1d{w, axis, deviation};
  }
  return best;
}

std::optional<double> DomainWeights::weight(SizeClass s, SpecClass t) const {
  for (const auto& r : records) {
    if (r.size == s && r.spec == t) return r.weight;
  }
  return std::nullopt;
}

namespace {

struct Attempt {
  WeightMethod method;
  StratumGrid weights;
};

bool all_positive_on_sample(const StratumGrid& w, const CountGrid& n) {
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 3; ++t)
      if (n[s][t] > 0 && !(w[s][t] > 0.0 && std::isfinite(w[s][t]))) return false;
  return true;
}

// Steps 1-3 of the hierarchy; nullopt when all of them fail.
std::optional<Attempt> calibrate(const StratumTable& table, const WeightOptions& options) {
  const auto& N = table.population;
  const auto& n = table.sample;

  bool cells_ok = true;
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 3; ++t)
      if ((N[s][t] > 0.0) != (n[s][t] > 0)) cells_ok = false;
  if (cells_ok) {
    StratumGrid w{};
    for (int s = 0; s < 2; ++s)
      for (int t = 0; t < 3; ++t)
        if (n[s][t] > 0) w[s][t] = N[s][t] / n[s][t];
    return Attempt{WeightMethod::cell, w};
  }

  try {
    auto raked = rake_2d(n, row_margins(N), col_margins(N), options.rake_tol, options.rake_max_iter);
    if (all_positive_on_sample(raked.weights, n)) return Attempt{WeightMethod::rake2d, raked.weights};
  } catch (const Error& e) {
    if (e.code() != Errc::infeasible_support && e.code() != Errc::rake_divergence &&
        e.code() != Errc::margin_mismatch) {
      throw;
    }
  }

  if (auto one = calibrate_1d(n, N); one && all_positive_on_sample(one->weights, n)) {
    return Attempt{one->axis == Axis::size ? WeightMethod::rake1d_size : WeightMethod::rake1d_spec, one->weights};
  }
  return std::nullopt;
}

int quality_rank(const StratumTable& table, const WeightOptions& options) {
  if (table.sample_total() == 0) return 4;
  auto attempt = calibrate(table, options);
  if (!attempt) return 3;  // would fall back to uniform
  switch (attempt->method) {
    case WeightMethod::cell: return 0;
    case WeightMethod::rake2d: return 1;
    default: return 2;
  }
}

}  // namespace

DomainWeights build_weights(const std::string& area, int year, const StratumTable& table,
                            const std::map<int, StratumTable>& history, const WeightOptions& options) {
  DomainWeights out;
  out.area = area;
  out.year = year;
  const int n_total = table.sample_total();
  const double N_total = table.population_total();
  if (n_total == 0) {
    out.missing = true;
    return out;
  }
  if (!(N_total > 0.0)) throw Error(Errc::domain, fmt::format("domain {}/{} has no population", area, year));

  if (auto attempt = calibrate(table, options)) {
    out.method = attempt->method;
    out.weights = attempt->weights;
  } else {
    // Temporal donor: nearest year, then best calibration quality, then most recent.
    std::optional<std::tuple<int, int, int>> best;  // (distance, quality, -year)
    for (const auto& [donor_year, donor] : history) {
      if (donor_year == year) continue;
      const double donor_total = donor.population_total();
      if (!(donor_total > 0.0)) continue;
      bool usable = true;
      for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 3; ++t)
          if (table.sample[s][t] > 0 && !(donor.population[s][t] > 0.0)) usable = false;
      if (!usable) continue;
      const std::tuple<int, int, int> key{std::abs(year - donor_year), quality_rank(donor, options), -donor_year};
      if (!best || key < *best) best = key;
    }
    if (best) {
      const int donor_year = -std::get<2>(*best);
      const auto& donor = history.at(donor_year);
      const double donor_total = donor.population_total();
      out.method = WeightMethod::donor;
      out.donor_year = donor_year;
      for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 3; ++t)
          if (table.sample[s][t] > 0) out.weights[s][t] = donor.population[s][t] / donor_total * N_total / table.sample[s][t];
    } else {
      out.method = WeightMethod::uniform;
      for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 3; ++t)
          if (table.sample[s][t] > 0) out.weights[s][t] = N_total / n_total;
    }
  }

  for (int s = 0; s < 2; ++s) {
    for (int t = 0; t < 3; ++t) {
      if (table.sample[s][t] == 0) continue;
      out.records.push_back({area, year, static_cast<SizeClass>(s), static_cast<SpecClass>(t), out.weights[s][t], out.method});
    }
  }
  return out;
}

PointEstimate ht_estimate(const DomainWeights& weights, std::span<const StratumValue> values, double population) {
  PointEstimate est;
  for (const auto& v : values) {
    auto w = weights.weight(v.size, v.spec);
    if (!w) {
      throw Error(Errc::unweighted_observation, fmt::format("value in stratum ({}, {}) of {}/{} has no weight",
                                                            to_string(v.size), to_string(v.spec), weights.area,
                                                            weights.year));
    }
    est.total += *w * v.value;
  }
  if (!(population > 0.0)) throw Error(Errc::domain, "domain population must be positive");
  est.mean = est.total / population;
  return est;
}

DesignVariance design_variance(const StratumTable& table, std::span<const StratumValue> values) {
  std::array<std::array<std::vector<double>, 3>, 2> by_stratum;
  for (const auto& v : values) by_stratum[static_cast<int>(v.size)][static_cast<int>(v.spec)].push_back(v.value);
  DesignVariance out;
  for (int s = 0; s < 2; ++s) {
    for (int t = 0; t < 3; ++t) {
      const auto& xs = by_stratum[s][t];
      const double n = static_cast<double>(xs.size());
      const double N = table.population[s][t];
      if (xs.empty()) continue;
      if (xs.size() == 1) {
        out.low_support = true;
        continue;
      }
      if (n >= N) continue;  // census fully observed: FPC is zero
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= n;
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      const double s2 = ss / (n - 1.0);
      out.var_total += N * N * (1.0 - n / N) * s2 / n;
    }
  }
  const double N_total = table.population_total();
  out.var_mean = N_total > 0.0 ? out.var_total / (N_total * N_total) : 0.0;
  return out;
}

std::map<std::pair<std::string, int>, StratumTable> build_strata(const std::vector<CensusRecord>& census,
                                                                 const std::vector<FarmRecord>& farms,
                                                                 const Crosswalk& xwalk, const std::vector<int>& years) {
  std::map<std::string, std::pair<StratumGrid, StratumGrid>> benchmarks;  // area -> (2010, 2020)
  std::vector<std::string> unmapped;
  for (const auto& c : census) {
    auto area = xwalk.area_of(c.municipality);
    if (!area) {
      unmapped.push_back(c.municipality);
      continue;
    }
    auto& [g2010, g2020] = benchmarks[*area];
    if (c.year == 2010) g2010[static_cast<int>(c.size)][static_cast<int>(c.spec)] += c.farms;
    else if (c.year == 2020) g2020[static_cast<int>(c.size)][static_cast<int>(c.spec)] += c.farms;
    else throw Error(Errc::domain, fmt::format("census year {} is neither 2010 nor 2020", c.year));
  }
  if (!unmapped.empty()) {
    std::sort(unmapped.begin(), unmapped.end());
    unmapped.erase(std::unique(unmapped.begin(), unmapped.end()), unmapped.end());
    throw Error(Errc::unmapped_unit, fmt::format("census municipalities not in crosswalk: {}", fmt::join(unmapped, ", ")));
  }

  std::map<std::pair<std::string, int>, StratumTable> strata;
  for (const auto& [area, bench] : benchmarks) {
    for (int y : years) strata[{area, y}].population = reconstruct_population(bench.first, bench.second, y);
  }
  for (const auto& f : farms) {
    auto it = strata.find({f.area, f.year});
    if (it == strata.end()) {
      throw Error(Errc::unmapped_unit, fmt::format("farm {} in {}/{} has no census population", f.farm_id, f.area, f.year));
    }
    ++it->second.sample[static_cast<int>(f.size)][static_cast<int>(f.spec)];
  }
  return strata;
}

std::vector<DomainWeights> build_all_weights(const std::map<std::pair<std::string, int>, StratumTable>& strata,
                                             const WeightOptions& options) {
  std::map<std::string, std::map<int, StratumTable>> by_area;
  for (const auto& [key, table] : strata) by_area[key.first][key.second] = table;
  std::vector<DomainWeights> out;
  for (const auto& [area, years] : by_area) {
    for (const auto& [year, table] : years) out.push_back(build_weights(area, year, table, years, options));
  }
  return out;
}

std::vector<DomainEstimate> estimate_domains(const std::map<std::pair<std::string, int>, StratumTable>& strata,
                                             const std::vector<DomainWeights>& weights,
                                             const std::vector<FarmRecord>& farms,
                                             const std::vector<std::string>& variables) {
  std::map<std::pair<std::string, int>, std::vector<const FarmRecord*>> by_domain;
  for (const auto& f : farms) by_domain[{f.area, f.year}].push_back(&f);

  std::vector<std::string> vars = variables;
  std::sort(vars.begin(), vars.end());
  std::vector<DomainEstimate> out;
  for (const auto& dw : weights) {
    const auto& table = strata.at({dw.area, dw.year});
    const auto& domain_farms = by_domain[{dw.area, dw.year}];
    for (const auto& var : vars) {
      DomainEstimate e;
      e.area = dw.area;
      e.year = dw.year;
      e.variable = var;
      e.population = table.population_total();
      e.method = dw.method;
      std::vector<StratumValue> values;
      for (const auto* f : domain_farms) {
        auto it = f->values.find(var);
        if (it != f->values.end() && std::isfinite(it->second)) values.push_back({f->size, f->spec, it->second});
      }
      e.n = static_cast<int>(values.size());
      if (dw.missing || values.empty()) {
        e.missing = true;
        out.push_back(std::move(e));
        continue;
      }
      const auto point = ht_estimate(dw, values, e.population);
      const auto var_est = design_variance(table, values);
      e.total = point.total;
      e.mean = point.mean;
      e.var_total = var_est.var_total;
      e.var_mean = var_est.var_mean;
      e.low_support = var_est.low_support;
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace harmonia
