#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "survsl/dataset.hpp"
#include "survsl/parallel.hpp"

namespace survsl {

enum class LearnerKind {
  cox_main_terms,
  weibull_aft,
  gamma_aft,
  elasticnet_cox,
  royston_parmar,
  random_survival_forest,
  survival_neural_network,
};

std::string_view to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(std::string_view name);
const std::vector<LearnerKind>& all_learner_kinds();

using Hyperparameters = std::map<std::string, double>;
using TuningGrid = std::map<std::string, std::vector<double>>;

struct LearnerSpec {
  LearnerKind kind = LearnerKind::cox_main_terms;
  Hyperparameters hyperparameters;
  TuningGrid tuning_grid;

  /// Defaults for every hyperparameter of `kind`:
  ///   elasticnet_cox           alpha 0.9, lambda 0.003
  ///   royston_parmar           k 3
  ///   random_survival_forest   ntree 500, mtry 3, nodesize 20, nsplit 10
  ///   survival_neural_network  n_nodes 20, decay 0.1, batch_size 256,
  ///                            epochs 1, learning_rate 0.01, init_output_zero 0
  static LearnerSpec defaults(LearnerKind kind);

  double get(const std::string& name) const;
  /// Fills missing hyperparameters from defaults and rejects unknown names or
  /// out-of-range values.
  LearnerSpec validated() const;
  std::string label() const { return std::string(to_string(kind)); }

  nlohmann::json to_json() const;
  static LearnerSpec from_json(const nlohmann::json& j);
};

struct TrainingInfo {
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t events = 0;
  std::uint64_t seed = 0;
};

/// Anything that predicts S(t | x). Covariate matrices passed in have their
/// columns ordered as feature_names().
class SurvivalPredictor {
 public:
  virtual ~SurvivalPredictor() = default;
  virtual const std::vector<std::string>& feature_names() const = 0;
  virtual Eigen::VectorXd predict_survival(const Eigen::MatrixXd& covariates, double t) const = 0;

  Eigen::VectorXd predict_risk(const Eigen::MatrixXd& covariates, double t) const {
    return (1.0 - predict_survival(covariates, t).array()).matrix();
  }
};

/// A trained candidate learner. Subclasses implement survival_at for t > 0;
/// the public entry point checks inputs and enforces the survival contract
/// (values in [0, 1], S(0 | x) = 1).
class FittedLearner : public SurvivalPredictor {
 public:
  static constexpr int kFormatVersion = 1;

  LearnerKind kind() const { return kind_; }
  const Hyperparameters& hyperparameters() const { return hyperparameters_; }
  const TrainingInfo& training() const { return training_; }
  const std::vector<std::string>& feature_names() const override { return feature_names_; }

  Eigen::VectorXd predict_survival(const Eigen::MatrixXd& covariates, double t) const final;

  /// Versioned document: kind tag, hyperparameters, training metadata and
  /// the kind-specific parameters.
  nlohmann::json to_json() const;

 protected:
  FittedLearner(LearnerKind kind, Hyperparameters hyperparameters, TrainingInfo training,
                std::vector<std::string> feature_names);

  virtual Eigen::VectorXd survival_at(const Eigen::MatrixXd& covariates, double t) const = 0;
  virtual nlohmann::json parameters_json() const = 0;

 private:
  LearnerKind kind_;
  Hyperparameters hyperparameters_;
  TrainingInfo training_;
  std::vector<std::string> feature_names_;
};

using LearnerPtr = std::shared_ptr<const FittedLearner>;

/// Free-function form of the learner contract.
Eigen::VectorXd predict_survival(const SurvivalPredictor& model, const Eigen::MatrixXd& covariates,
                                 double t);

/// Fits the learner described by `spec` (tuning grids are ignored here; see
/// tune_hyperparameters). `seed` drives every stochastic learner; `exec` is
/// used by learners with a parallel kernel (the forest).
LearnerPtr fit_learner(const LearnerSpec& spec, const SurvivalDataset& data, std::uint64_t seed,
                       const Execution& exec = {});

LearnerPtr learner_from_json(const nlohmann::json& j);

/// Shared precondition checks: nonempty covariates, at least one event.
void require_fittable(const SurvivalDataset& data, std::string_view learner);

}  // namespace survsl
