#pragma once

// Cross-validated choice of covariance family and neighbourhood size, then
// block kriging of every area with the winners.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "harmonia/geom.hpp"
#include "harmonia/kriging.hpp"
#include "harmonia/variogram.hpp"

namespace harmonia {

struct TuningConfig {
  std::vector<ModelFamily> families{{Family::spherical, 0.5},
                                    {Family::exponential, 0.5},
                                    {Family::gaussian, 0.5},
                                    {Family::matern, 1.5}};
  std::vector<std::size_t> nmax_grid{8, 16, 32, 64};
  std::size_t folds = 5;
  std::size_t repeats = 1;
  std::uint64_t seed = 20110101;
  std::size_t initial_nmax = 16;
  double spacing = 0.0;  // 0: sqrt(area) / 4 per block
  bool refit_per_fold = true;
  std::size_t n_lags = 15;
  double cutoff_fraction = 1.0 / 3.0;
  std::size_t threads = 1;

  void validate() const;
};

struct CvEntry {
  std::string stage;      // "family" or "nmax"
  std::string candidate;  // family name or nmax value
  double rmse = 0.0;
};

struct AlignmentResult {
  std::vector<BlockPrediction> predictions;  // ordered by area id
  ModelFamily chosen_family;
  std::size_t chosen_nmax = 0;
  VariogramSpec spec;
  std::vector<CvEntry> cv_table;
};

/// Fold index (0..K-1) of every sample for one repeat. Depends only on
/// (seed, n, K, repeat).
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed, std::size_t repeat);

/// Empirical variogram plus WLS fit with the configured lag layout.
VariogramSpec fit_samples(std::span<const Sample> samples, const ModelFamily& family, const TuningConfig& cfg);

/// Predicts the held-out samples from the training samples of one fold.
using FoldPredictor =
    std::function<std::vector<double>(std::span<const Sample> train, std::span<const Sample> held_out)>;

/// K-fold RMSE over all held-out predictions, averaged over the repeats.
/// Returns +inf when the predictor throws for any fold.
double cross_validate(const GridFieldSnapshot& field, const TuningConfig& cfg, const FoldPredictor& predict);

/// Cross-validated RMSE of local ordinary point kriging.
double cv_rmse(const GridFieldSnapshot& field, const ModelFamily& family, std::size_t nmax, const TuningConfig& cfg);

/// Family with the lowest RMSE at cfg.initial_nmax; ties go to the earlier
/// candidate. Throws selection-failure when every candidate failed.
ModelFamily select_family(const GridFieldSnapshot& field, const TuningConfig& cfg,
                          std::vector<CvEntry>* table = nullptr);

std::size_t select_nmax(const GridFieldSnapshot& field, const ModelFamily& family, const TuningConfig& cfg,
                        std::vector<CvEntry>* table = nullptr);

/// Selection of family and nmax followed by block kriging of every area.
/// Per-area failures are recorded on the prediction, not thrown.
AlignmentResult align_field(const GridFieldSnapshot& field, const std::vector<AreaUnit>& areas,
                            const TuningConfig& cfg);

}  // namespace harmonia
