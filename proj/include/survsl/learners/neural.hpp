#pragma once

#include <cstdint>
#include <memory>
#include <span>

#include <Eigen/Dense>

#include "survsl/learners/learner.hpp"
#include "survsl/step_function.hpp"

namespace survsl {

/// One hidden tanh layer and a scalar log-risk output without bias:
///   eta(x) = w2 . tanh(W1 x + b1), x standardized.
struct NetworkWeights {
  Eigen::MatrixXd w1;  // hidden x p
  Eigen::VectorXd b1;  // hidden
  Eigen::VectorXd w2;  // hidden

  Eigen::Index size() const { return w1.size() + b1.size() + w2.size(); }
  Eigen::VectorXd flatten() const;
  static NetworkWeights unflatten(const Eigen::VectorXd& flat, Eigen::Index hidden, Eigen::Index p);

  Eigen::VectorXd forward(const Eigen::MatrixXd& x) const;
};

struct NetworkLoss {
  double value = 0.0;
  NetworkWeights gradient;
};

/// Batch objective
///   -(1/m) log PL_batch(eta) + (decay / 2) (||W1||^2 + ||w2||^2),
/// m the batch size and PL the Breslow partial likelihood restricted to the
/// batch, with its analytic gradient.
NetworkLoss network_loss_and_gradient(const NetworkWeights& weights, const Eigen::MatrixXd& x,
                                      std::span<const double> times, std::span<const int> events,
                                      double decay);

class SurvivalNeuralNetwork final : public FittedLearner {
 public:
  SurvivalNeuralNetwork(Hyperparameters hyperparameters, TrainingInfo training,
                        std::vector<std::string> feature_names, NetworkWeights weights,
                        Eigen::VectorXd input_means, Eigen::VectorXd input_scales,
                        double eta_offset, StepFunction baseline_cumhaz);

  const NetworkWeights& weights() const { return weights_; }
  const StepFunction& baseline_cumulative_hazard() const { return baseline_; }
  /// Log-risk relative to the training mean log-risk.
  Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& covariates) const;

  static std::shared_ptr<const SurvivalNeuralNetwork> from_parameters(
      Hyperparameters hyperparameters, TrainingInfo training,
      std::vector<std::string> feature_names, const nlohmann::json& parameters);

 protected:
  Eigen::VectorXd survival_at(const Eigen::MatrixXd& covariates, double t) const override;
  nlohmann::json parameters_json() const override;

 private:
  NetworkWeights weights_;
  Eigen::VectorXd means_;
  Eigen::VectorXd scales_;
  double eta_offset_;
  StepFunction baseline_;
};

/// Mini-batch training with Adam on the partial-likelihood term; weight decay
/// is applied as a proximal shrinkage w <- w / (1 + learning_rate * decay)
/// after each step, which stays stable for arbitrarily large decay. Batches
/// come from a fresh seeded shuffle each epoch. Xavier-uniform initialization;
/// init_output_zero = 1 starts the output weights at zero. The baseline is the
/// Breslow estimator on the training data.
std::shared_ptr<const SurvivalNeuralNetwork> fit_survival_nn(
    const SurvivalDataset& data,
    const LearnerSpec& spec = LearnerSpec::defaults(LearnerKind::survival_neural_network),
    std::uint64_t seed = 0);

}  // namespace survsl
