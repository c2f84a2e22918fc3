#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "survsl/bootstrap.hpp"
#include "survsl/censoring.hpp"
#include "survsl/learners/learner.hpp"
#include "survsl/superlearner.hpp"

namespace survsl {

/// Point estimate with a 95% interval. lower/upper always bracket the point:
/// they are the percentile bounds widened to include the point when the
/// bootstrap distribution sits entirely on one side of it (which happens for
/// optimism-affected internal validation). The raw percentile bounds are kept.
struct Estimate {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double percentile_lower = 0.0;
  double percentile_upper = 0.0;
  std::size_t undefined = 0;

  static Estimate from_interval(double point, const PercentileInterval& interval);
  nlohmann::json to_json() const;
  static Estimate from_json(const nlohmann::json& j);
};

struct CurvePoint {
  double predicted = 0.0;
  double observed = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct MetricReport {
  static constexpr int kFormatVersion = 1;

  std::string label;
  std::string validation;  // internal_refit_candidates, internal_refit_full, apparent, temporal
  std::string censoring;   // refit_on_cohort or carried_from_training
  double tau = 0.0;
  std::size_t n = 0;
  std::size_t events_by_tau = 0;
  int bootstrap_iterations = 0;
  std::uint64_t bootstrap_seed = 0;
  bool mean_calibration_reciprocal = false;

  Estimate tauroc;
  Estimate mean_calibration;
  Estimate weak_calibration_slope;
  Estimate weak_calibration_intercept;
  Estimate ici;
  Estimate brier;
  std::vector<CurvePoint> calibration_curve;
  nlohmann::json notes = nlohmann::json::object();

  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
  static MetricReport load(const std::filesystem::path& path);
  /// Columns predicted, observed, lower, upper.
  void write_curve_csv(std::ostream& out) const;
};

struct ValidationOptions {
  double tau = 7.0;
  BootstrapConfig bootstrap;
  IpcwOptions ipcw;
  int knots = 5;
  int grid_points = 100;
  bool reciprocal_mean_calibration = false;
};

/// Number of outputs per replicate: six scalar metrics then the curve grid.
inline constexpr std::size_t kScalarMetrics = 6;

/// All metrics of one risk vector on one cohort, in the order tauroc, mean
/// calibration, slope, intercept, ICI, Brier, then the curve at `grid`.
/// With `strict` false every failing metric becomes NaN instead of throwing.
std::vector<double> compute_metrics(std::span<const double> risk, const SurvivalDataset& cohort,
                                    const CensoringModel& censoring, const ValidationOptions& options,
                                    std::span<const double> grid, bool strict);

/// Columns of `cohort` reordered to the predictor's feature names; throws
/// InputError("covariate_mismatch") naming every absent covariate.
SurvivalDataset align_covariates(const SurvivalDataset& cohort,
                                 const std::vector<std::string>& feature_names);

/// Frozen-model evaluation on a new cohort. Censoring is refit on the cohort
/// (and on each resample) unless `carried_censoring` is given. Bootstrap
/// resamples the cohort only.
MetricReport temporal_validate(const SurvivalPredictor& model, const SurvivalDataset& cohort,
                               const ValidationOptions& options,
                               const std::optional<CensoringModel>& carried_censoring = std::nullopt,
                               const std::string& label = "validation");

enum class InternalScheme {
  /// Refit every candidate with nonzero weight on the resample; weights and
  /// hyperparameters stay frozen.
  refit_candidates,
  /// Rerun the whole super learner (cross-validation and weights) on the resample.
  refit_full,
};

std::string_view to_string(InternalScheme scheme);
InternalScheme internal_scheme_from_string(std::string_view name);

/// Internal validation: apparent metrics of `model` on its training data,
/// intervals from refit-on-resample, evaluate-on-original bootstrap.
MetricReport internal_validate(const SuperLearnerModel& model, const SurvivalDataset& data,
                               const SuperLearnerConfig& config, const ValidationOptions& options,
                               InternalScheme scheme, const std::string& label = "development");

/// Markdown table with one column per report (metric rows, point and CI).
std::string render_report_table(const std::vector<MetricReport>& reports);

/// Development vs validation comparison with drift flags.
std::string render_drift_summary(const std::optional<MetricReport>& development,
                                 const MetricReport& validation, double threshold);

}  // namespace survsl
