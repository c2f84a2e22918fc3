#pragma once

#include <memory>

#include <Eigen/Dense>

#include "survsl/learners/learner.hpp"
#include "survsl/spline.hpp"

namespace survsl {

/// Flexible parametric proportional-hazards model on the log cumulative
/// hazard scale:
///   log H(t | x) = gamma_0 + s(log t) + (x - means) b,
/// s a restricted cubic spline in log time (see RestrictedCubicSpline).
class RoystonParmarModel final : public FittedLearner {
 public:
  RoystonParmarModel(Hyperparameters hyperparameters, TrainingInfo training,
                     std::vector<std::string> feature_names, RestrictedCubicSpline spline,
                     Eigen::VectorXd spline_coefficients, Eigen::VectorXd coefficients,
                     Eigen::VectorXd means, int restarts, double loglik);

  const RestrictedCubicSpline& spline() const { return spline_; }
  /// (gamma_0, gamma_1, ..., gamma_K-1): intercept then spline basis weights.
  const Eigen::VectorXd& spline_coefficients() const { return gamma_; }
  const Eigen::VectorXd& coefficients() const { return beta_; }
  const Eigen::VectorXd& means() const { return means_; }
  int restarts() const { return restarts_; }
  double loglik() const { return loglik_; }

  /// gamma_0 + s(log t).
  double log_baseline_cumhaz(double t) const;

  static std::shared_ptr<const RoystonParmarModel> from_parameters(
      Hyperparameters hyperparameters, TrainingInfo training,
      std::vector<std::string> feature_names, const nlohmann::json& parameters);

 protected:
  Eigen::VectorXd survival_at(const Eigen::MatrixXd& covariates, double t) const override;
  nlohmann::json parameters_json() const override;

 private:
  RestrictedCubicSpline spline_;
  Eigen::VectorXd gamma_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd means_;
  int restarts_;
  double loglik_;
};

struct RoystonParmarOptions {
  double gradient_tolerance = 1e-7;  // mean log-likelihood scale
  int max_iterations = 2000;
  int max_restarts = 5;
  int monotonicity_grid = 512;
};

/// Knots: k interior knots at the j/(k+1) quantiles of the log event times,
/// boundary knots at the smallest and largest log event time. Maximum
/// likelihood by BFGS; parameter values with a nonpositive spline slope at
/// any event time are infeasible. A fit whose log cumulative hazard is not
/// increasing on a dense grid is rejected and refit from a perturbed start,
/// up to max_restarts times.
std::shared_ptr<const RoystonParmarModel> fit_royston_parmar(
    const SurvivalDataset& data,
    const LearnerSpec& spec = LearnerSpec::defaults(LearnerKind::royston_parmar),
    const RoystonParmarOptions& options = {});

}  // namespace survsl
