#include "harmonia/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "harmonia/error.hpp"
#include "harmonia/parallel.hpp"
#include "harmonia/rng.hpp"

namespace harmonia {

void TuningConfig::validate() const {
  if (folds < 2) throw Error(Errc::domain, "cross-validation needs at least 2 folds");
  if (repeats < 1) throw Error(Errc::domain, "repeats must be >= 1");
  if (families.empty()) throw Error(Errc::domain, "no candidate covariance families");
  if (nmax_grid.empty()) throw Error(Errc::domain, "empty nmax grid");
  for (auto n : nmax_grid) {
    if (n < 1) throw Error(Errc::domain, "nmax candidates must be >= 1");
  }
  if (initial_nmax < 1) throw Error(Errc::domain, "initial nmax must be >= 1");
  if (spacing < 0.0) throw Error(Errc::domain, "spacing must be >= 0");
  if (n_lags < 1 || !(cutoff_fraction > 0.0)) throw Error(Errc::domain, "invalid lag layout");
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed, std::size_t repeat) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto gen = substream(seed, fmt::format("cv-folds/{}", repeat));
  std::shuffle(order.begin(), order.end(), gen);
  std::vector<std::size_t> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[order[pos]] = pos % folds;
  return fold;
}

VariogramSpec fit_samples(std::span<const Sample> samples, const ModelFamily& family, const TuningConfig& cfg) {
  const double diagonal = bounding_diagonal(samples);
  if (!(diagonal > 0.0)) throw Error(Errc::fit_failure, "samples share one location");
  const auto emp = empirical_variogram(samples, cfg.n_lags, diagonal * cfg.cutoff_fraction);
  return fit_variogram(emp, family, sample_variance(samples), diagonal);
}

double cross_validate(const GridFieldSnapshot& field, const TuningConfig& cfg, const FoldPredictor& predict) {
  const std::size_t n = field.samples.size();
  if (n < cfg.folds) {
    throw Error(Errc::insufficient_data, fmt::format("{} samples for {}-fold cross-validation", n, cfg.folds));
  }
  double rmse_sum = 0.0;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const auto fold = fold_assignment(n, cfg.folds, cfg.seed, r);
    double sq = 0.0;
    for (std::size_t k = 0; k < cfg.folds; ++k) {
      std::vector<Sample> train, held_out;
      for (std::size_t i = 0; i < n; ++i) (fold[i] == k ? held_out : train).push_back(field.samples[i]);
      if (held_out.empty()) continue;
      std::vector<double> predicted;
      try {
        predicted = predict(train, held_out);
      } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
      }
      if (predicted.size() != held_out.size()) throw Error(Errc::domain, "predictor returned wrong count");
      for (std::size_t i = 0; i < held_out.size(); ++i) {
        const double e = predicted[i] - held_out[i].value;
        sq += e * e;
      }
    }
    rmse_sum += std::sqrt(sq / static_cast<double>(n));
  }
  const double rmse = rmse_sum / static_cast<double>(cfg.repeats);
  return std::isfinite(rmse) ? rmse : std::numeric_limits<double>::infinity();
}

double cv_rmse(const GridFieldSnapshot& field, const ModelFamily& family, std::size_t nmax, const TuningConfig& cfg) {
  std::optional<VariogramSpec> global;
  if (!cfg.refit_per_fold) {
    try {
      global = fit_samples(field.samples, family, cfg);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return cross_validate(field, cfg, [&](std::span<const Sample> train, std::span<const Sample> held_out) {
    const VariogramSpec spec = global ? *global : fit_samples(train, family, cfg);
    std::vector<double> out;
    out.reserve(held_out.size());
    for (const auto& s : held_out) out.push_back(krige_point(train, s.location, spec, nmax).mean);
    return out;
  });
}

namespace {

std::size_t argmin_first(const std::vector<double>& rmse) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < rmse.size(); ++i) {
    if (rmse[i] < rmse[best]) best = i;
  }
  if (!std::isfinite(rmse[best])) throw Error(Errc::selection_failure, "every candidate failed cross-validation");
  return best;
}

}  // namespace

ModelFamily select_family(const GridFieldSnapshot& field, const TuningConfig& cfg, std::vector<CvEntry>* table) {
  cfg.validate();
  std::vector<double> rmse(cfg.families.size());
  parallel_for(cfg.families.size(), cfg.threads,
               [&](std::size_t i) { rmse[i] = cv_rmse(field, cfg.families[i], cfg.initial_nmax, cfg); });
  if (table) {
    for (std::size_t i = 0; i < rmse.size(); ++i) table->push_back({"family", cfg.families[i].name(), rmse[i]});
  }
  return cfg.families[argmin_first(rmse)];
}

std::size_t select_nmax(const GridFieldSnapshot& field, const ModelFamily& family, const TuningConfig& cfg,
                        std::vector<CvEntry>* table) {
  cfg.validate();
  std::vector<double> rmse(cfg.nmax_grid.size());
  parallel_for(cfg.nmax_grid.size(), cfg.threads,
               [&](std::size_t i) { rmse[i] = cv_rmse(field, family, cfg.nmax_grid[i], cfg); });
  if (table) {
    for (std::size_t i = 0; i < rmse.size(); ++i) {
      table->push_back({"nmax", std::to_string(cfg.nmax_grid[i]), rmse[i]});
    }
  }
  return cfg.nmax_grid[argmin_first(rmse)];
}

AlignmentResult align_field(const GridFieldSnapshot& field, const std::vector<AreaUnit>& areas,
                            const TuningConfig& cfg) {
  if (areas.empty()) throw Error(Errc::empty_input, "no target areas");
  AlignmentResult result;
  result.chosen_family = select_family(field, cfg, &result.cv_table);
  result.chosen_nmax = select_nmax(field, result.chosen_family, cfg, &result.cv_table);
  double chosen_rmse = 0.0;
  for (const auto& e : result.cv_table) {
    if (e.stage == "nmax" && e.candidate == std::to_string(result.chosen_nmax)) chosen_rmse = e.rmse;
  }
  try {
    result.spec = fit_samples(field.samples, result.chosen_family, cfg);
  } catch (const Error& e) {
    throw Error(Errc::selection_failure, std::string("final variogram fit failed: ") + e.what());
  }

  std::vector<const AreaUnit*> ordered;
  for (const auto& a : areas) ordered.push_back(&a);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->id() < b->id(); });

  result.predictions.resize(ordered.size());
  parallel_for(ordered.size(), cfg.threads, [&](std::size_t i) {
    BlockPrediction p;
    try {
      p = predict_block(field, *ordered[i], result.spec, result.chosen_nmax, cfg.spacing);
    } catch (const Error& e) {
      p.area_id = ordered[i]->id();
      p.family = result.chosen_family.name();
      p.nmax = result.chosen_nmax;
      p.mean = std::numeric_limits<double>::quiet_NaN();
      p.variance = std::numeric_limits<double>::quiet_NaN();
      p.error = e.what();
    }
    p.cv_rmse = chosen_rmse;
    result.predictions[i] = std::move(p);
  });
  return result;
}

}  // namespace harmonia
