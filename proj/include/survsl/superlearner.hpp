#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "survsl/censoring.hpp"
#include "survsl/learners/learner.hpp"
#include "survsl/losses.hpp"
#include "survsl/parallel.hpp"

namespace survsl {

/// Machine-readable record of a learner dropped from the pool.
struct LearnerWarning {
  std::string learner;
  std::string code;
  std::string message;
  int fold = -1;  // -1 for full-data failures

  nlohmann::json to_json() const;
  static LearnerWarning from_json(const nlohmann::json& j);
};

// ---------------------------------------------------------------------------
// Screening

struct ScreeningOptions {
  bool enabled = false;
  double alpha = 0.2;
  double lambda = 0.028;
  /// Screen inside every training fold instead of once on the full data.
  /// Screening once on the full data lets the outcome leak into the
  /// cross-validated losses through the selected set.
  bool within_folds = false;
};

struct ScreeningInfo {
  double alpha = 0.0;
  double lambda = 0.0;
  bool within_folds = false;
  std::vector<std::string> retained;

  nlohmann::json to_json() const;
  static ScreeningInfo from_json(const nlohmann::json& j);
};

/// Indices of covariates with a nonzero elastic-net Cox coefficient at
/// (alpha, lambda). Throws InputError("empty_screening") when none survive.
std::vector<std::size_t> screen_elasticnet(const SurvivalDataset& data, double alpha, double lambda);

// ---------------------------------------------------------------------------
// Cross-validated predictions

struct CvOptions {
  std::uint64_t seed = 0;
  /// Loss and inner fold count used when a spec carries a tuning grid.
  LossKind tuning_loss = LossKind::ipcw_brier;
  int inner_folds = 10;
  IpcwOptions ipcw;
  std::optional<ScreeningOptions> fold_screening;  // screening inside folds
  Execution exec;
};

struct CvPredictions {
  /// n x K_kept out-of-fold risks at tau.
  Eigen::MatrixXd risk;
  /// Indices into the input spec list of the learners that survived.
  std::vector<std::size_t> kept;
  std::vector<LearnerWarning> warnings;
};

/// Entry (i, k) is learner k's risk at tau for subject i from the fit on the
/// folds that exclude i. Specs with a tuning grid are tuned on each training
/// split by an inner cross-validation. A learner that fails on any fold is
/// dropped with a warning. Throws NumericalError("all_learners_failed") when
/// nothing survives.
CvPredictions cv_predictions(const std::vector<LearnerSpec>& specs, const SurvivalDataset& data,
                             std::span<const int> folds, double tau, const CvOptions& options = {});

// ---------------------------------------------------------------------------
// Weights and combination

struct WeightOptimization {
  Eigen::VectorXd weights;
  double loss = 0.0;
  Eigen::VectorXd vertex_losses;
  std::string method;  // "single", "projected_gradient", "nelder_mead_softmax" or "vertex"
};

/// Minimizes loss(inverse_logit(logit(clip(oof)) w)) over the probability
/// simplex. Smooth losses use projected gradient descent from the
/// barycenter, every vertex and seeded Dirichlet draws; auroc_t uses
/// Nelder-Mead on softmax-parameterized weights from 20 starts. The
/// optimizer's answer is kept only when it beats the best vertex by more
/// than 1e-12 (relative); otherwise the first-listed best vertex is returned.
WeightOptimization optimize_weights(const Eigen::MatrixXd& oof, LossKind loss,
                                    const IpcwWeights& weights, std::uint64_t seed = 0);

/// inverse_logit(sum_k w_k logit(clip(risk_k))) row by row; columns with zero
/// weight are skipped.
Eigen::VectorXd combine_risks(const Eigen::MatrixXd& risks, const Eigen::VectorXd& weights);

/// Combined risk at t of fitted candidates; 0 at t = 0.
Eigen::VectorXd combine(const std::vector<LearnerPtr>& candidates, const Eigen::VectorXd& weights,
                        const Eigen::MatrixXd& covariates, double t);

// ---------------------------------------------------------------------------
// Model

struct CvReport {
  LossKind loss = LossKind::ipcw_brier;
  double tau = 0.0;
  int folds = 0;
  std::vector<std::string> learners;
  std::vector<double> learner_losses;  // losses of the clipped out-of-fold risks
  double ensemble_loss = 0.0;
  std::string weight_method;

  nlohmann::json to_json() const;
  static CvReport from_json(const nlohmann::json& j);
};

/// Stacked ensemble predicting S(t | x) = 1 - combined risk at t. Callers
/// pass covariates with the columns of feature_names(); screened-out columns
/// are ignored.
class SuperLearnerModel final : public SurvivalPredictor {
 public:
  static constexpr int kFormatVersion = 1;

  SuperLearnerModel(std::vector<LearnerSpec> specs, std::vector<LearnerPtr> candidates,
                    Eigen::VectorXd weights, LossKind loss, double tau, CvReport cv_report,
                    std::optional<ScreeningInfo> screening, std::vector<std::string> feature_names,
                    std::vector<LearnerWarning> warnings, CensoringModel training_censoring,
                    std::uint64_t seed);

  const std::vector<LearnerSpec>& specs() const { return specs_; }
  const std::vector<LearnerPtr>& candidates() const { return candidates_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  LossKind loss() const { return loss_; }
  double tau() const { return tau_; }
  const CvReport& cv_report() const { return cv_report_; }
  const std::optional<ScreeningInfo>& screening() const { return screening_; }
  const std::vector<std::string>& feature_names() const override { return feature_names_; }
  const std::vector<LearnerWarning>& warnings() const { return warnings_; }
  const CensoringModel& training_censoring() const { return training_censoring_; }
  std::uint64_t seed() const { return seed_; }

  Eigen::VectorXd predict_survival(const Eigen::MatrixXd& covariates, double t) const override;
  Eigen::VectorXd predict_risk_at(const Eigen::MatrixXd& covariates, double t) const;

  nlohmann::json to_json() const;
  static SuperLearnerModel from_json(const nlohmann::json& j);

 private:
  Eigen::MatrixXd candidate_columns(const Eigen::MatrixXd& covariates) const;

  std::vector<LearnerSpec> specs_;
  std::vector<LearnerPtr> candidates_;
  Eigen::VectorXd weights_;
  LossKind loss_;
  double tau_;
  CvReport cv_report_;
  std::optional<ScreeningInfo> screening_;
  std::vector<std::string> feature_names_;
  std::vector<std::size_t> candidate_columns_;
  std::vector<LearnerWarning> warnings_;
  CensoringModel training_censoring_;
  std::uint64_t seed_;
};

struct SuperLearnerConfig {
  std::vector<LearnerSpec> specs;
  LossKind loss = LossKind::ipcw_brier;
  double tau = 7.0;
  int k_folds = 10;
  int inner_folds = 10;
  std::uint64_t seed = 0;
  ScreeningOptions screening;
  IpcwOptions ipcw;
  Execution exec;
};

/// Screening (optional) -> folds -> out-of-fold predictions -> censoring KM
/// and IPCW weights -> weight optimization -> refit of every surviving
/// candidate on the full data. When screening is enabled the elastic-net Cox
/// learner leaves the pool.
SuperLearnerModel fit_super_learner(const SurvivalDataset& data, const SuperLearnerConfig& config);

}  // namespace survsl
