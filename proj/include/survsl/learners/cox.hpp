#pragma once

#include <memory>
#include <span>

#include <Eigen/Dense>

#include "survsl/learners/learner.hpp"
#include "survsl/step_function.hpp"

namespace survsl {

struct PartialLikelihood {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;  // empty unless requested
};

/// Cox log partial likelihood with Breslow handling of tied event times:
///   l(b) = sum_{events i} [ x_i b - log sum_{j: T_j >= T_i} exp(x_j b) ].
PartialLikelihood cox_partial_likelihood(const Eigen::MatrixXd& x, std::span<const double> times,
                                         std::span<const int> events, const Eigen::VectorXd& beta,
                                         bool with_hessian = true);

/// Same likelihood as a function of the per-subject linear predictors.
double cox_partial_loglik_eta(std::span<const double> times, std::span<const int> events,
                              const Eigen::VectorXd& eta);

/// Breslow estimator H0(t) = sum_{t_k <= t} d_k / sum_{j: T_j >= t_k} exp(eta_j).
StepFunction breslow_cumulative_hazard(std::span<const double> times, std::span<const int> events,
                                       const Eigen::VectorXd& eta);

/// S(t | x) = exp(-H0(t) exp((x - means) b)). Shared by the Cox and the
/// elastic-net Cox learners; the baseline refers to a subject at the
/// training means.
class ProportionalHazardsModel final : public FittedLearner {
 public:
  ProportionalHazardsModel(LearnerKind kind, Hyperparameters hyperparameters, TrainingInfo training,
                           std::vector<std::string> feature_names, Eigen::VectorXd coefficients,
                           Eigen::VectorXd means, StepFunction baseline_cumhaz,
                           Eigen::VectorXd standard_errors = Eigen::VectorXd(),
                           int iterations = 0, double loglik = 0.0);

  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  const Eigen::VectorXd& means() const { return means_; }
  const Eigen::VectorXd& standard_errors() const { return standard_errors_; }
  const StepFunction& baseline_cumulative_hazard() const { return baseline_; }
  int iterations() const { return iterations_; }
  double loglik() const { return loglik_; }

  Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& covariates) const;

  static std::shared_ptr<const ProportionalHazardsModel> from_parameters(
      LearnerKind kind, Hyperparameters hyperparameters, TrainingInfo training,
      std::vector<std::string> feature_names, const nlohmann::json& parameters);

 protected:
  Eigen::VectorXd survival_at(const Eigen::MatrixXd& covariates, double t) const override;
  nlohmann::json parameters_json() const override;

 private:
  Eigen::VectorXd coefficients_;
  Eigen::VectorXd means_;
  StepFunction baseline_;
  Eigen::VectorXd standard_errors_;
  int iterations_;
  double loglik_;
};

struct CoxFitOptions {
  /// Convergence when ||grad||_inf / n falls below this value.
  double gradient_tolerance = 1e-8;
  int max_iterations = 100;
  /// Coefficients beyond this many standard deviations of their covariate
  /// signal a monotone likelihood (perfect separation).
  double separation_bound = 25.0;
};

/// Newton-Raphson on the Breslow partial likelihood with step halving.
std::shared_ptr<const ProportionalHazardsModel> fit_cox(const SurvivalDataset& data,
                                                        const LearnerSpec& spec = LearnerSpec::defaults(LearnerKind::cox_main_terms),
                                                        const CoxFitOptions& options = {});

struct ElasticNetOptions {
  double tolerance = 1e-7;   // max coefficient change, standardized scale
  int max_outer = 1000;
  int max_sweeps = 100000;   // total coordinate sweeps across all outer steps
};

/// Penalized partial likelihood
///   -(1/n) l(b) + lambda * (alpha ||b||_1 + (1 - alpha)/2 ||b||_2^2)
/// on internally standardized covariates (population sd), solved by cyclical
/// coordinate descent on the diagonal quadratic approximation of the partial
/// likelihood around the current linear predictor. Coefficients are returned
/// on the original covariate scale.
std::shared_ptr<const ProportionalHazardsModel> fit_elasticnet_cox(
    const SurvivalDataset& data,
    const LearnerSpec& spec = LearnerSpec::defaults(LearnerKind::elasticnet_cox),
    const ElasticNetOptions& options = {});

}  // namespace survsl
