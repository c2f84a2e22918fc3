#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "survsl/censoring.hpp"
#include "survsl/dataset.hpp"

namespace survsl {

/// IPCW cumulative/dynamic tAUROC at tau (see ipcw_auc).
double tauroc(std::span<const double> risk, const SurvivalDataset& data, double tau,
              const CensoringModel& censoring, const IpcwOptions& ipcw = {});

struct MeanCalibration {
  double ratio = 0.0;     // observed / expected, or expected / observed when reciprocal
  double observed = 0.0;  // 1 - KM(tau) on the evaluation cohort
  double expected = 0.0;  // mean predicted risk
  bool reciprocal = false;
};

/// Observed event probability by tau (one minus the Kaplan-Meier estimate on
/// `data`) over the mean predicted risk. Throws InputError("km_undefined")
/// when every subject leaves follow-up before tau without an event, and
/// InputError("zero_mean_risk") when the mean risk is 0.
MeanCalibration mean_calibration(std::span<const double> risk, const SurvivalDataset& data, double tau,
                                 bool reciprocal = false);

struct WeakCalibration {
  double intercept = 0.0;  // with the slope fixed at 1 (logit offset)
  double slope = 0.0;      // free logistic slope
};

/// IPCW-weighted logistic regressions of Y(tau) on logit(risk), risks
/// clipped to [1e-12, 1 - 1e-12]. Constant risks throw
/// NumericalError("degenerate_design").
WeakCalibration weak_calibration(std::span<const double> risk, const SurvivalDataset& data, double tau,
                                 const CensoringModel& censoring, const IpcwOptions& ipcw = {});

/// Knot quantiles used for `count` spline knots (3 to 7).
std::vector<double> calibration_knot_quantiles(int count);

struct CalibrationCurve {
  std::vector<double> knots;  // on the logit scale
  Eigen::VectorXd coefficients;
  std::vector<double> predicted;  // grid of predicted risks
  std::vector<double> observed;   // curve at the grid
  double ici = 0.0;

  /// Curve value at arbitrary predicted risks.
  std::vector<double> evaluate(std::span<const double> risk) const;
};

/// Flexible calibration curve: IPCW-weighted logistic regression of Y(tau)
/// on a restricted cubic spline of logit(risk), knots at fixed quantiles of
/// logit(risk) (0.05, 0.275, 0.5, 0.725, 0.95 for five knots). The curve is
/// evaluated on `grid_points` risks evenly spaced between the 1st and 99th
/// percentile of the predicted risks. ICI is the mean over subjects of
/// |curve(risk_i) - risk_i|. Throws InputError("insufficient_distinct_risks")
/// when the knots are not distinct.
/// `grid` overrides the evaluation grid (used for bootstrap bands).
CalibrationCurve calibration_curve(std::span<const double> risk, const SurvivalDataset& data, double tau,
                                   const CensoringModel& censoring, int knots = 5,
                                   const IpcwOptions& ipcw = {}, int grid_points = 100,
                                   std::span<const double> grid = {});

/// ipcw_brier with weights from `censoring`; identical to the loss.
double brier_metric(std::span<const double> risk, const SurvivalDataset& data, double tau,
                    const CensoringModel& censoring, const IpcwOptions& ipcw = {});

}  // namespace survsl
