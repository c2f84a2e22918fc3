#pragma once

#include <cstdint>
#include <vector>

#include "survsl/censoring.hpp"
#include "survsl/learners/learner.hpp"
#include "survsl/losses.hpp"
#include "survsl/parallel.hpp"

namespace survsl {

struct GridPointResult {
  Hyperparameters hyperparameters;
  double loss = 0.0;  // pooled out-of-fold loss; NaN when disqualified
  int failed_folds = 0;
  bool disqualified = false;
};

struct TuningResult {
  LearnerSpec selected;  // tuning_grid cleared
  std::vector<GridPointResult> grid;  // in evaluation order
};

/// Grid points of spec.tuning_grid combined with the fixed hyperparameters,
/// duplicates removed, ordered most regularized first:
///   elasticnet_cox           lambda descending, then alpha descending
///   random_survival_forest   nodesize descending, then mtry ascending
///   survival_neural_network  decay descending, then n_nodes ascending
///   royston_parmar           k ascending
/// Remaining hyperparameters are ordered ascending by name and value.
std::vector<Hyperparameters> tuning_grid_points(const LearnerSpec& spec);

/// Grid search by inner k-fold cross-validation. Each grid point is fit on
/// every inner training split; the out-of-fold risks at tau are pooled and
/// scored with the IPCW loss (censoring KM fit on `data`). A grid point that
/// fails on more than half of the folds is disqualified; the lowest loss wins
/// and ties keep the earlier (more regularized) point. A grid with a single
/// distinct point is returned without cross-validation.
TuningResult tune_hyperparameters(const LearnerSpec& spec, const SurvivalDataset& data,
                                  LossKind loss, double tau, int k_inner, std::uint64_t seed,
                                  const IpcwOptions& ipcw = {}, const Execution& exec = {});

}  // namespace survsl
