#pragma once

#include <memory>

#include <Eigen/Dense>

#include "survsl/learners/learner.hpp"

namespace survsl {

/// Accelerated failure time model with location loc(x) = intercept + (x - means) b
/// on the log-time scale.
///   weibull_aft: log T = loc(x) + sigma W, W standard minimum-Gumbel, so
///                S(t | x) = exp(-exp((log t - loc(x)) / sigma)).
///   gamma_aft:   T ~ Gamma(shape, scale = exp(loc(x))), so
///                S(t | x) = Q(shape, t / exp(loc(x))), Q the regularized upper
///                incomplete gamma function.
class AftModel final : public FittedLearner {
 public:
  AftModel(LearnerKind kind, Hyperparameters hyperparameters, TrainingInfo training,
           std::vector<std::string> feature_names, double intercept, Eigen::VectorXd coefficients,
           Eigen::VectorXd means, double shape_parameter, int iterations, double loglik);

  double intercept() const { return intercept_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  const Eigen::VectorXd& means() const { return means_; }
  /// sigma for weibull_aft, the gamma shape for gamma_aft.
  double shape_parameter() const { return shape_; }
  int iterations() const { return iterations_; }
  double loglik() const { return loglik_; }

  Eigen::VectorXd location(const Eigen::MatrixXd& covariates) const;

  static std::shared_ptr<const AftModel> from_parameters(LearnerKind kind,
                                                         Hyperparameters hyperparameters,
                                                         TrainingInfo training,
                                                         std::vector<std::string> feature_names,
                                                         const nlohmann::json& parameters);

 protected:
  Eigen::VectorXd survival_at(const Eigen::MatrixXd& covariates, double t) const override;
  nlohmann::json parameters_json() const override;

 private:
  double intercept_;
  Eigen::VectorXd coefficients_;
  Eigen::VectorXd means_;
  double shape_;
  int iterations_;
  double loglik_;
};

/// Times below this floor are raised to it inside parametric likelihoods.
inline constexpr double kMinParametricTime = 1e-8;

struct WeibullAftOptions {
  /// Convergence when ||grad||_inf of the mean log-likelihood falls below this.
  double gradient_tolerance = 1e-8;
  int max_iterations = 200;
};

/// Newton-Raphson with step halving on the censored log-likelihood.
std::shared_ptr<const AftModel> fit_weibull_aft(const SurvivalDataset& data,
                                                const LearnerSpec& spec = LearnerSpec::defaults(LearnerKind::weibull_aft),
                                                const WeibullAftOptions& options = {});

struct GammaAftOptions {
  double gradient_tolerance = 1e-6;
  int max_iterations = 1000;
};

/// BFGS on the censored log-likelihood; analytic gradient in the location
/// parameters, central differences in log(shape).
std::shared_ptr<const AftModel> fit_gamma_aft(const SurvivalDataset& data,
                                              const LearnerSpec& spec = LearnerSpec::defaults(LearnerKind::gamma_aft),
                                              const GammaAftOptions& options = {});

/// log Q(a, x) with an asymptotic expansion where Q underflows.
double log_gamma_q(double a, double x);

}  // namespace survsl
