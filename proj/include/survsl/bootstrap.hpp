#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "survsl/dataset.hpp"
#include "survsl/parallel.hpp"

namespace survsl {

struct BootstrapConfig {
  int iterations = 200;
  std::uint64_t seed = 0;
  /// A metric undefined on a larger share of resamples is an error.
  double max_undefined_fraction = 0.10;
  Execution exec;
};

/// Computes the outputs of one bootstrap replicate from its resampled rows.
/// Throwing survsl::Error marks every output of the replicate undefined;
/// returning NaN marks a single output undefined.
using ReplicateFn =
    std::function<std::vector<double>(std::span<const std::size_t> rows, std::size_t iteration)>;

/// iterations x outputs matrix of replicate values. Replicate b resamples n
/// rows with replacement from Rng(derive_seed(seed, b)), so the result does
/// not depend on exec.
Eigen::MatrixXd bootstrap_replicates(std::size_t n, std::size_t outputs, const ReplicateFn& replicate,
                                     const BootstrapConfig& config);

/// Rows drawn by replicate b.
std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed, std::size_t iteration);

struct PercentileInterval {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t defined = 0;
  std::size_t undefined = 0;
};

/// Type-7 2.5% and 97.5% quantiles of the defined values (NaN skipped).
PercentileInterval percentile_interval(std::span<const double> values, double level = 0.95);

struct BootstrapEstimate {
  double point = 0.0;
  double lower = 0.0;  // percentile bounds, not forced to bracket the point
  double upper = 0.0;
  std::size_t undefined = 0;
};

using Metric = std::function<double(const SurvivalDataset& cohort, std::span<const double> risk)>;
/// Risks at the horizon for `evaluation` from a model trained on `training`.
using RiskProducer =
    std::function<std::vector<double>(const SurvivalDataset& training, const SurvivalDataset& evaluation)>;

enum class BootstrapScheme {
  /// Risks are computed once; each replicate scores a resample of subjects.
  resample_evaluation,
  /// Each replicate trains on a resample and scores the original cohort.
  refit_evaluate_original,
};

/// Percentile bootstrap of `metric`. The point estimate is the metric on the
/// full cohort with risks from producer(data, data). Throws
/// NumericalError("bootstrap_undefined") when the metric fails on more than
/// max_undefined_fraction of the replicates.
BootstrapEstimate bootstrap_ci(const Metric& metric, const SurvivalDataset& data,
                               const RiskProducer& producer, const BootstrapConfig& config,
                               BootstrapScheme scheme = BootstrapScheme::resample_evaluation);

}  // namespace survsl
