#include "survsl/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "survsl/error.hpp"
#include "survsl/glm.hpp"
#include "survsl/losses.hpp"
#include "survsl/numeric.hpp"
#include "survsl/spline.hpp"
#include "survsl/step_function.hpp"

namespace survsl {

namespace {

void check_risk(std::span<const double> risk, const SurvivalDataset& data) {
  if (risk.size() != data.size()) {
    throw InputError("length_mismatch", "risk vector has " + std::to_string(risk.size()) +
                                            " entries for " + std::to_string(data.size()) +
                                            " subjects");
  }
  for (std::size_t i = 0; i < risk.size(); ++i) {
    if (!(risk[i] >= 0.0 && risk[i] <= 1.0)) {
      throw InputError("invalid_risk", "risk at subject " + std::to_string(i) + " is outside [0, 1]");
    }
  }
}

struct BinaryOutcome {
  Eigen::VectorXd y;
  Eigen::VectorXd w;
};

BinaryOutcome binary_outcome(const SurvivalDataset& data, double tau, const CensoringModel& censoring,
                             const IpcwOptions& ipcw) {
  const auto weights = ipcw_weights(censoring, data, tau, ipcw);
  BinaryOutcome out{Eigen::VectorXd(static_cast<Eigen::Index>(data.size())),
                    Eigen::VectorXd(static_cast<Eigen::Index>(data.size()))};
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.y[static_cast<Eigen::Index>(i)] = weights.outcome(i);
    out.w[static_cast<Eigen::Index>(i)] = weights.weights[i];
  }
  return out;
}

Eigen::VectorXd logit_risk(std::span<const double> risk) {
  Eigen::VectorXd lp(static_cast<Eigen::Index>(risk.size()));
  for (std::size_t i = 0; i < risk.size(); ++i) lp[static_cast<Eigen::Index>(i)] = logit(clip_probability(risk[i]));
  return lp;
}

}  // namespace

double tauroc(std::span<const double> risk, const SurvivalDataset& data, double tau,
              const CensoringModel& censoring, const IpcwOptions& ipcw) {
  check_risk(risk, data);
  return ipcw_auc(risk, ipcw_weights(censoring, data, tau, ipcw));
}

MeanCalibration mean_calibration(std::span<const double> risk, const SurvivalDataset& data, double tau,
                                 bool reciprocal) {
  check_risk(risk, data);
  if (data.size() == 0) throw InputError("empty_dataset", "mean calibration of an empty cohort");
  const StepFunction km = kaplan_meier(data.times(), data.events());
  // KM at tau is undefined once follow-up ends before tau with survivors left.
  const double last_time = data.max_time();
  if (last_time < tau && km(last_time) > 0.0) {
    throw InputError("km_undefined",
                     "Kaplan-Meier survival is undefined at the horizon: follow-up ends at " +
                         std::to_string(last_time) + " before tau = " + std::to_string(tau),
                     {{"last_time", last_time}, {"tau", tau}});
  }
  MeanCalibration out;
  out.observed = 1.0 - km(tau);
  double total = 0.0;
  for (double r : risk) total += r;
  out.expected = total / static_cast<double>(risk.size());
  if (!(out.expected > 0.0)) throw InputError("zero_mean_risk", "mean predicted risk is 0");
  out.reciprocal = reciprocal;
  if (reciprocal) {
    if (!(out.observed > 0.0)) {
      throw InputError("zero_observed_risk", "no events by tau; expected/observed is undefined");
    }
    out.ratio = out.expected / out.observed;
  } else {
    out.ratio = out.observed / out.expected;
  }
  return out;
}

WeakCalibration weak_calibration(std::span<const double> risk, const SurvivalDataset& data, double tau,
                                 const CensoringModel& censoring, const IpcwOptions& ipcw) {
  check_risk(risk, data);
  const auto outcome = binary_outcome(data, tau, censoring, ipcw);
  const Eigen::VectorXd lp = logit_risk(risk);
  const auto n = lp.size();

  Eigen::MatrixXd design(n, 2);
  design.col(0).setOnes();
  design.col(1) = lp;
  const auto slope_fit = fit_weighted_logistic(design, outcome.y, outcome.w);
  const auto intercept_fit =
      fit_weighted_logistic(Eigen::MatrixXd::Ones(n, 1), outcome.y, outcome.w, lp);
  return {intercept_fit.coefficients[0], slope_fit.coefficients[1]};
}

std::vector<double> calibration_knot_quantiles(int count) {
  switch (count) {
    case 3: return {0.1, 0.5, 0.9};
    case 4: return {0.05, 0.35, 0.65, 0.95};
    case 5: return {0.05, 0.275, 0.5, 0.725, 0.95};
    case 6: return {0.05, 0.23, 0.41, 0.59, 0.77, 0.95};
    case 7: return {0.025, 0.1833, 0.3417, 0.5, 0.6583, 0.8167, 0.975};
    default:
      throw InputError("invalid_knots", "calibration curves support 3 to 7 knots, got " +
                                            std::to_string(count));
  }
}

std::vector<double> CalibrationCurve::evaluate(std::span<const double> risk) const {
  const RestrictedCubicSpline spline(knots);
  std::vector<double> out(risk.size());
  for (std::size_t i = 0; i < risk.size(); ++i) {
    const double u = logit(clip_probability(risk[i]));
    out[i] = inverse_logit(coefficients[0] + spline.basis(u).dot(coefficients.tail(coefficients.size() - 1)));
  }
  return out;
}

CalibrationCurve calibration_curve(std::span<const double> risk, const SurvivalDataset& data, double tau,
                                   const CensoringModel& censoring, int knots, const IpcwOptions& ipcw,
                                   int grid_points, std::span<const double> grid) {
  check_risk(risk, data);
  const auto probs = calibration_knot_quantiles(knots);
  const Eigen::VectorXd lp = logit_risk(risk);
  std::vector<double> sorted(lp.data(), lp.data() + lp.size());
  std::sort(sorted.begin(), sorted.end());
  CalibrationCurve curve;
  for (double q : probs) curve.knots.push_back(quantile_sorted(sorted, q));
  for (std::size_t j = 1; j < curve.knots.size(); ++j) {
    if (!(curve.knots[j] > curve.knots[j - 1])) {
      throw InputError("insufficient_distinct_risks",
                       "predicted risks are too concentrated to place " + std::to_string(knots) +
                           " distinct spline knots",
                       {{"knots", curve.knots}});
    }
  }
  const RestrictedCubicSpline spline(curve.knots);
  const auto outcome = binary_outcome(data, tau, censoring, ipcw);
  Eigen::MatrixXd design(lp.size(), spline.num_basis() + 1);
  design.col(0).setOnes();
  design.rightCols(spline.num_basis()) = spline.basis(lp);
  curve.coefficients = fit_weighted_logistic(design, outcome.y, outcome.w).coefficients;

  if (grid.empty()) {
    std::vector<double> sorted_risk(risk.begin(), risk.end());
    std::sort(sorted_risk.begin(), sorted_risk.end());
    const double lo = quantile_sorted(sorted_risk, 0.01);
    const double hi = quantile_sorted(sorted_risk, 0.99);
    for (int g = 0; g < grid_points; ++g) {
      curve.predicted.push_back(grid_points == 1 ? lo : lo + (hi - lo) * g / (grid_points - 1));
    }
  } else {
    curve.predicted.assign(grid.begin(), grid.end());
  }
  curve.observed = curve.evaluate(curve.predicted);
  const auto fitted = curve.evaluate(risk);
  double total = 0.0;
  for (std::size_t i = 0; i < risk.size(); ++i) total += std::abs(fitted[i] - risk[i]);
  curve.ici = total / static_cast<double>(risk.size());
  return curve;
}

double brier_metric(std::span<const double> risk, const SurvivalDataset& data, double tau,
                    const CensoringModel& censoring, const IpcwOptions& ipcw) {
  check_risk(risk, data);
  return ipcw_brier(risk, ipcw_weights(censoring, data, tau, ipcw));
}

}  // namespace survsl
