#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "survsl/learners/learner.hpp"
#include "survsl/parallel.hpp"
#include "survsl/step_function.hpp"

namespace survsl {

/// Binary survival tree. Internal nodes send x[feature] <= threshold to the
/// left child; terminal nodes carry the Nelson-Aalen cumulative hazard of
/// their in-bag samples.
struct SurvivalTree {
  struct Node {
    int feature = -1;  // -1 marks a terminal node
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int leaf = -1;  // index into leaves for terminal nodes
  };
  std::vector<Node> nodes;
  std::vector<StepFunction> leaves;

  const StepFunction& leaf_for(std::span<const double> x) const;
  nlohmann::json to_json() const;
  static SurvivalTree from_json(const nlohmann::json& j);
};

struct ForestParameters {
  int ntree = 500;
  int mtry = 3;
  int nodesize = 20;  // minimum in-bag size of either child of a split
  int nsplit = 10;    // random candidate thresholds per feature; 0 = every distinct value
};

/// Seed of tree b: the tree draws its bootstrap sample first and then every
/// split candidate from one stream seeded here.
std::uint64_t forest_tree_seed(std::uint64_t seed, std::size_t tree);
/// In-bag rows of tree b (n draws with replacement).
std::vector<std::size_t> forest_bootstrap(std::size_t n, std::uint64_t seed, std::size_t tree);

/// Grows one tree on the in-bag rows with log-rank splitting.
SurvivalTree grow_survival_tree(const SurvivalDataset& data, const ForestParameters& params,
                                std::uint64_t seed, std::size_t tree);

/// Grows all trees. The serial and parallel paths produce identical forests.
std::vector<SurvivalTree> grow_forest(const SurvivalDataset& data, const ForestParameters& params,
                                      std::uint64_t seed, const Execution& exec = {});

/// Ensemble survival S(t | x) = exp(-mean_b H_b(t | x)).
class RandomSurvivalForest final : public FittedLearner {
 public:
  RandomSurvivalForest(Hyperparameters hyperparameters, TrainingInfo training,
                       std::vector<std::string> feature_names, std::vector<SurvivalTree> trees);

  const std::vector<SurvivalTree>& trees() const { return trees_; }

  /// Ensemble cumulative hazard at t for each row.
  Eigen::VectorXd cumulative_hazard(const Eigen::MatrixXd& covariates, double t) const;

  static std::shared_ptr<const RandomSurvivalForest> from_parameters(
      Hyperparameters hyperparameters, TrainingInfo training,
      std::vector<std::string> feature_names, const nlohmann::json& parameters);

 protected:
  Eigen::VectorXd survival_at(const Eigen::MatrixXd& covariates, double t) const override;
  nlohmann::json parameters_json() const override;

 private:
  std::vector<SurvivalTree> trees_;
};

std::shared_ptr<const RandomSurvivalForest> fit_random_survival_forest(
    const SurvivalDataset& data,
    const LearnerSpec& spec = LearnerSpec::defaults(LearnerKind::random_survival_forest),
    std::uint64_t seed = 0, const Execution& exec = {});

}  // namespace survsl
