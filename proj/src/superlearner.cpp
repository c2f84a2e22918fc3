#include "survsl/superlearner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "survsl/error.hpp"
#include "survsl/learners/cox.hpp"
#include "survsl/learners/tuning.hpp"
#include "survsl/numeric.hpp"
#include "survsl/optim.hpp"
#include "survsl/random.hpp"

namespace survsl {

nlohmann::json LearnerWarning::to_json() const {
  return {{"learner", learner}, {"code", code}, {"message", message}, {"fold", fold}};
}

LearnerWarning LearnerWarning::from_json(const nlohmann::json& j) {
  return {j.at("learner").get<std::string>(), j.at("code").get<std::string>(),
          j.at("message").get<std::string>(), j.value("fold", -1)};
}

nlohmann::json ScreeningInfo::to_json() const {
  return {{"method", "elasticnet_cox"},
          {"alpha", alpha},
          {"lambda", lambda},
          {"within_folds", within_folds},
          {"retained", retained}};
}

ScreeningInfo ScreeningInfo::from_json(const nlohmann::json& j) {
  return {j.at("alpha").get<double>(), j.at("lambda").get<double>(), j.value("within_folds", false),
          j.at("retained").get<std::vector<std::string>>()};
}

std::vector<std::size_t> screen_elasticnet(const SurvivalDataset& data, double alpha, double lambda) {
  LearnerSpec spec = LearnerSpec::defaults(LearnerKind::elasticnet_cox);
  spec.hyperparameters = {{"alpha", alpha}, {"lambda", lambda}};
  const auto fit = fit_elasticnet_cox(data, spec);
  std::vector<std::size_t> retained;
  for (Eigen::Index j = 0; j < fit->coefficients().size(); ++j) {
    if (fit->coefficients()[j] != 0.0) retained.push_back(static_cast<std::size_t>(j));
  }
  if (retained.empty()) {
    throw InputError("empty_screening",
                     "elastic-net screening at lambda = " + std::to_string(lambda) +
                         " retained no covariates; use a smaller lambda",
                     {{"alpha", alpha}, {"lambda", lambda}});
  }
  return retained;
}

// ---------------------------------------------------------------------------

CvPredictions cv_predictions(const std::vector<LearnerSpec>& specs, const SurvivalDataset& data,
                             std::span<const int> folds, double tau, const CvOptions& options) {
  if (specs.empty()) throw InputError("empty_pool", "the learner pool is empty");
  if (folds.size() != data.size()) {
    throw InputError("length_mismatch", "fold assignment does not match the dataset size");
  }
  const int kf = *std::max_element(folds.begin(), folds.end()) + 1;
  const auto num_folds = static_cast<std::size_t>(kf);
  const auto num_specs = specs.size();
  const auto n = data.size();

  std::vector<std::vector<std::size_t>> fold_columns(num_folds);
  if (options.fold_screening && options.fold_screening->enabled) {
    parallel_for(num_folds, options.exec, [&](std::size_t f) {
      const auto train = fold_complement(folds, static_cast<int>(f));
      fold_columns[f] = screen_elasticnet(data.subset(train), options.fold_screening->alpha,
                                          options.fold_screening->lambda);
    });
  }

  Eigen::MatrixXd risk = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n),
                                                   static_cast<Eigen::Index>(num_specs),
                                                   std::numeric_limits<double>::quiet_NaN());
  std::vector<std::optional<LearnerWarning>> failures(num_folds * num_specs);
  parallel_for(num_folds * num_specs, options.exec, [&](std::size_t item) {
    const auto f = item / num_specs;
    const auto k = item % num_specs;
    const auto train = fold_complement(folds, static_cast<int>(f));
    const auto test = fold_members(folds, static_cast<int>(f));
    try {
      SurvivalDataset training = data.subset(train);
      SurvivalDataset testing = data.subset(test);
      if (!fold_columns[f].empty()) {
        training = training.select_covariates(fold_columns[f]);
        testing = testing.select_covariates(fold_columns[f]);
      }
      LearnerSpec spec = specs[k];
      if (!spec.tuning_grid.empty()) {
        spec = tune_hyperparameters(spec, training, options.tuning_loss, tau, options.inner_folds,
                                    derive_seed(options.seed, 4, k * 1000 + f), options.ipcw)
                   .selected;
      }
      const auto model = fit_learner(spec, training, derive_seed(derive_seed(options.seed, 2, k), f));
      const Eigen::VectorXd r = model->predict_risk(testing.covariates(), tau);
      for (std::size_t m = 0; m < test.size(); ++m) {
        risk(static_cast<Eigen::Index>(test[m]), static_cast<Eigen::Index>(k)) = r[static_cast<Eigen::Index>(m)];
      }
    } catch (const Error& e) {
      failures[item] = LearnerWarning{specs[k].label(), e.code(), e.what(), static_cast<int>(f)};
    }
  });

  CvPredictions out;
  for (std::size_t k = 0; k < num_specs; ++k) {
    std::optional<LearnerWarning> first;
    for (std::size_t f = 0; f < num_folds && !first; ++f) first = failures[f * num_specs + k];
    if (first) {
      first->message = "dropped from the pool: " + first->message;
      out.warnings.push_back(*first);
    } else {
      out.kept.push_back(k);
    }
  }
  if (out.kept.empty()) {
    nlohmann::json details = nlohmann::json::array();
    for (const auto& w : out.warnings) details.push_back(w.to_json());
    throw NumericalError("all_learners_failed", "every candidate learner failed in cross-validation",
                         {{"warnings", details}});
  }
  out.risk.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(out.kept.size()));
  for (std::size_t c = 0; c < out.kept.size(); ++c) {
    out.risk.col(static_cast<Eigen::Index>(c)) = risk.col(static_cast<Eigen::Index>(out.kept[c]));
  }
  return out;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd combine_risks(const Eigen::MatrixXd& risks, const Eigen::VectorXd& weights) {
  if (risks.cols() != weights.size()) {
    throw InputError("dimension_mismatch", "risk matrix has " + std::to_string(risks.cols()) +
                                               " columns but there are " +
                                               std::to_string(weights.size()) + " weights");
  }
  Eigen::VectorXd out(risks.rows());
  for (Eigen::Index i = 0; i < risks.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < risks.cols(); ++k) {
      if (weights[k] == 0.0) continue;
      s += weights[k] * logit(clip_probability(risks(i, k)));
    }
    out[i] = inverse_logit(s);
  }
  return out;
}

Eigen::VectorXd combine(const std::vector<LearnerPtr>& candidates, const Eigen::VectorXd& weights,
                        const Eigen::MatrixXd& covariates, double t) {
  if (static_cast<Eigen::Index>(candidates.size()) != weights.size()) {
    throw InputError("dimension_mismatch", "number of candidates and weights differ");
  }
  if (!(t >= 0.0)) throw InputError("invalid_time", "prediction time must be >= 0");
  if (t == 0.0) return Eigen::VectorXd::Zero(covariates.rows());
  Eigen::MatrixXd risks = Eigen::MatrixXd::Zero(covariates.rows(), weights.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (weights[static_cast<Eigen::Index>(k)] == 0.0) continue;
    risks.col(static_cast<Eigen::Index>(k)) = candidates[k]->predict_risk(covariates, t);
  }
  return combine_risks(risks, weights);
}

namespace {

class StackingObjective {
 public:
  StackingObjective(const Eigen::MatrixXd& oof, LossKind loss, const IpcwWeights& weights)
      : loss_(loss), weights_(weights), logits_(oof.rows(), oof.cols()) {
    for (Eigen::Index i = 0; i < oof.rows(); ++i) {
      for (Eigen::Index k = 0; k < oof.cols(); ++k) {
        const double r = oof(i, k);
        if (!(r >= 0.0 && r <= 1.0)) {
          throw InputError("invalid_risk", "out-of-fold risks must lie in [0, 1]");
        }
        logits_(i, k) = logit(clip_probability(r));
      }
    }
  }

  Eigen::Index dim() const { return logits_.cols(); }

  std::vector<double> risks(const Eigen::VectorXd& w) const {
    std::vector<double> r(static_cast<std::size_t>(logits_.rows()));
    for (Eigen::Index i = 0; i < logits_.rows(); ++i) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < logits_.cols(); ++k) {
        if (w[k] != 0.0) s += w[k] * logits_(i, k);
      }
      r[static_cast<std::size_t>(i)] = inverse_logit(s);
    }
    return r;
  }

  double value(const Eigen::VectorXd& w) const {
    const double v = evaluate_loss(loss_, risks(w), weights_);
    if (!std::isfinite(v)) {
      throw NumericalError("nonfinite_loss", "stacking loss is not finite during weight optimization");
    }
    return v;
  }

  // Gradient of the smooth losses with respect to w.
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const {
    const auto r = risks(w);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
    for (Eigen::Index i = 0; i < logits_.rows(); ++i) {
      const auto s = static_cast<std::size_t>(i);
      const double wi = weights_.weights[s];
      if (wi == 0.0) continue;
      const double y = weights_.outcome(s);
      const double ri = r[s];
      const double c = loss_ == LossKind::ipcw_brier ? wi * 2.0 * (ri - y) * ri * (1.0 - ri)
                                                     : wi * (ri - y);
      g.noalias() += c * logits_.row(i).transpose();
    }
    return g / static_cast<double>(logits_.rows());
  }

 private:
  LossKind loss_;
  const IpcwWeights& weights_;
  Eigen::MatrixXd logits_;
};

Eigen::VectorXd clean_simplex(Eigen::VectorXd w) {
  w = w.cwiseMax(0.0);
  const double total = w.sum();
  return w / total;
}

// Projected gradient descent with backtracking on the descent-lemma bound.
std::pair<Eigen::VectorXd, double> projected_gradient(const StackingObjective& f, Eigen::VectorXd x) {
  double fx = f.value(x);
  double step = 1.0;
  for (int iteration = 0; iteration < 5000; ++iteration) {
    const Eigen::VectorXd g = f.gradient(x);
    bool moved = false;
    Eigen::VectorXd next;
    double f_next = fx;
    for (int halving = 0; halving < 80; ++halving) {
      next = clean_simplex(project_to_simplex(x - step * g));
      const Eigen::VectorXd d = next - x;
      if (d.lpNorm<Eigen::Infinity>() < 1e-15) break;
      f_next = f.value(next);
      if (f_next <= fx + g.dot(d) + d.squaredNorm() / (2.0 * step)) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    const double change = (next - x).lpNorm<Eigen::Infinity>();
    const double decrease = fx - f_next;
    x = next;
    fx = f_next;
    step *= 2.0;
    if (change < 1e-12 || decrease <= 1e-16 * std::max(1.0, std::abs(fx))) {
      if (change < 1e-9) break;
    }
  }
  return {x, fx};
}

Eigen::VectorXd softmax(const Eigen::VectorXd& v) {
  const Eigen::ArrayXd e = (v.array() - v.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

}  // namespace

WeightOptimization optimize_weights(const Eigen::MatrixXd& oof, LossKind loss,
                                    const IpcwWeights& weights, std::uint64_t seed) {
  const auto k = oof.cols();
  if (k < 1) throw InputError("empty_pool", "weight optimization needs at least one learner");
  if (static_cast<std::size_t>(oof.rows()) != weights.size()) {
    throw InputError("length_mismatch", "out-of-fold matrix rows do not match the weights");
  }
  const StackingObjective f(oof, loss, weights);
  WeightOptimization out;
  out.vertex_losses.resize(k);
  Eigen::Index best_vertex = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    out.vertex_losses[j] = f.value(Eigen::VectorXd::Unit(k, j));
    if (out.vertex_losses[j] < out.vertex_losses[best_vertex]) best_vertex = j;
  }
  if (k == 1) {
    out.weights = Eigen::VectorXd::Ones(1);
    out.loss = out.vertex_losses[0];
    out.method = "single";
    return out;
  }

  Rng rng(derive_seed(seed, 0x5357u));
  Eigen::VectorXd best_w;
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](const Eigen::VectorXd& w, double v) {
    if (v < best) {
      best = v;
      best_w = w;
    }
  };
  if (loss == LossKind::auroc_t) {
    out.method = "nelder_mead_softmax";
    auto objective = [&](const Eigen::VectorXd& v) { return f.value(softmax(v)); };
    NelderMeadOptions nm;
    nm.initial_step = 1.0;
    nm.value_tolerance = 1e-12;
    nm.max_evaluations = 200 * static_cast<int>(k + 1);
    for (int start = 0; start < 20; ++start) {
      Eigen::VectorXd v0 = Eigen::VectorXd::Zero(k);
      if (start > 0) {
        for (Eigen::Index j = 0; j < k; ++j) v0[j] = 2.0 * rng.normal();
      }
      const auto r = minimize_nelder_mead(objective, v0, nm);
      const Eigen::VectorXd w = clean_simplex(softmax(r.x));
      consider(w, f.value(w));
    }
  } else {
    out.method = "projected_gradient";
    std::vector<Eigen::VectorXd> starts{Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k))};
    for (Eigen::Index j = 0; j < k; ++j) starts.push_back(Eigen::VectorXd::Unit(k, j));
    for (int s = 0; s < 5; ++s) {
      Eigen::VectorXd w(k);
      for (Eigen::Index j = 0; j < k; ++j) w[j] = rng.exponential(1.0);
      starts.push_back(w / w.sum());
    }
    for (const auto& x0 : starts) {
      const auto [w, v] = projected_gradient(f, x0);
      consider(w, v);
    }
  }
  const double vertex = out.vertex_losses[best_vertex];
  if (best < vertex - 1e-12 * std::max(1.0, std::abs(vertex))) {
    out.weights = best_w;
    out.loss = best;
  } else {
    out.weights = Eigen::VectorXd::Unit(k, best_vertex);
    out.loss = vertex;
    out.method = "vertex";
  }
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json CvReport::to_json() const {
  nlohmann::json learners_json = nlohmann::json::array();
  for (std::size_t k = 0; k < learners.size(); ++k) {
    learners_json.push_back({{"learner", learners[k]}, {"cv_loss", learner_losses[k]}});
  }
  return {{"loss", std::string(to_string(loss))},
          {"tau", tau},
          {"folds", folds},
          {"learners", learners_json},
          {"ensemble_cv_loss", ensemble_loss},
          {"weight_method", weight_method}};
}

CvReport CvReport::from_json(const nlohmann::json& j) {
  CvReport r;
  r.loss = loss_kind_from_string(j.at("loss").get<std::string>());
  r.tau = j.at("tau").get<double>();
  r.folds = j.at("folds").get<int>();
  for (const auto& l : j.at("learners")) {
    r.learners.push_back(l.at("learner").get<std::string>());
    r.learner_losses.push_back(l.at("cv_loss").get<double>());
  }
  r.ensemble_loss = j.at("ensemble_cv_loss").get<double>();
  r.weight_method = j.value("weight_method", "");
  return r;
}

SuperLearnerModel::SuperLearnerModel(std::vector<LearnerSpec> specs,
                                     std::vector<LearnerPtr> candidates, Eigen::VectorXd weights,
                                     LossKind loss, double tau, CvReport cv_report,
                                     std::optional<ScreeningInfo> screening,
                                     std::vector<std::string> feature_names,
                                     std::vector<LearnerWarning> warnings,
                                     CensoringModel training_censoring, std::uint64_t seed)
    : specs_(std::move(specs)),
      candidates_(std::move(candidates)),
      weights_(std::move(weights)),
      loss_(loss),
      tau_(tau),
      cv_report_(std::move(cv_report)),
      screening_(std::move(screening)),
      feature_names_(std::move(feature_names)),
      warnings_(std::move(warnings)),
      training_censoring_(std::move(training_censoring)),
      seed_(seed) {
  if (candidates_.empty() || static_cast<Eigen::Index>(candidates_.size()) != weights_.size()) {
    throw InputError("invalid_model", "super learner needs one weight per candidate");
  }
  if ((weights_.array() < 0.0).any() || std::abs(weights_.sum() - 1.0) > 1e-10) {
    throw InputError("invalid_model", "super learner weights must lie on the simplex");
  }
  const auto& used = candidates_.front()->feature_names();
  for (const auto& name : used) {
    const auto it = std::find(feature_names_.begin(), feature_names_.end(), name);
    if (it == feature_names_.end()) {
      throw InputError("invalid_model", "candidate covariate '" + name + "' is not a model input");
    }
    candidate_columns_.push_back(static_cast<std::size_t>(it - feature_names_.begin()));
  }
}

Eigen::MatrixXd SuperLearnerModel::candidate_columns(const Eigen::MatrixXd& covariates) const {
  if (covariates.cols() != static_cast<Eigen::Index>(feature_names_.size())) {
    throw InputError("dimension_mismatch", "super learner expects " +
                                               std::to_string(feature_names_.size()) +
                                               " covariates but got " +
                                               std::to_string(covariates.cols()));
  }
  Eigen::MatrixXd out(covariates.rows(), static_cast<Eigen::Index>(candidate_columns_.size()));
  for (std::size_t c = 0; c < candidate_columns_.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = covariates.col(static_cast<Eigen::Index>(candidate_columns_[c]));
  }
  return out;
}

Eigen::VectorXd SuperLearnerModel::predict_risk_at(const Eigen::MatrixXd& covariates, double t) const {
  return combine(candidates_, weights_, candidate_columns(covariates), t);
}

Eigen::VectorXd SuperLearnerModel::predict_survival(const Eigen::MatrixXd& covariates, double t) const {
  return (1.0 - predict_risk_at(covariates, t).array()).matrix();
}

nlohmann::json SuperLearnerModel::to_json() const {
  nlohmann::json specs_json = nlohmann::json::array();
  for (const auto& s : specs_) specs_json.push_back(s.to_json());
  nlohmann::json candidates_json = nlohmann::json::array();
  for (const auto& c : candidates_) candidates_json.push_back(c->to_json());
  nlohmann::json warnings_json = nlohmann::json::array();
  for (const auto& w : warnings_) warnings_json.push_back(w.to_json());
  return {{"format_version", kFormatVersion},
          {"kind", "super_learner"},
          {"loss", std::string(to_string(loss_))},
          {"tau", tau_},
          {"seed", seed_},
          {"feature_names", feature_names_},
          {"screening", screening_ ? screening_->to_json() : nlohmann::json()},
          {"specs", specs_json},
          {"weights", std::vector<double>(weights_.data(), weights_.data() + weights_.size())},
          {"candidates", candidates_json},
          {"cv_report", cv_report_.to_json()},
          {"warnings", warnings_json},
          {"training_censoring", training_censoring_.to_json()}};
}

SuperLearnerModel SuperLearnerModel::from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "super_learner") {
    throw InputError("unsupported_format", "document is not a super learner model");
  }
  if (j.value("format_version", 0) != kFormatVersion) {
    throw InputError("unsupported_format", "unsupported super learner format_version");
  }
  std::vector<LearnerSpec> specs;
  for (const auto& s : j.at("specs")) specs.push_back(LearnerSpec::from_json(s));
  std::vector<LearnerPtr> candidates;
  for (const auto& c : j.at("candidates")) candidates.push_back(learner_from_json(c));
  const auto w = j.at("weights").get<std::vector<double>>();
  std::optional<ScreeningInfo> screening;
  if (!j.at("screening").is_null()) screening = ScreeningInfo::from_json(j.at("screening"));
  std::vector<LearnerWarning> warnings;
  for (const auto& x : j.at("warnings")) warnings.push_back(LearnerWarning::from_json(x));
  return SuperLearnerModel(std::move(specs), std::move(candidates),
                           Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
                           loss_kind_from_string(j.at("loss").get<std::string>()),
                           j.at("tau").get<double>(), CvReport::from_json(j.at("cv_report")),
                           std::move(screening), j.at("feature_names").get<std::vector<std::string>>(),
                           std::move(warnings), CensoringModel::from_json(j.at("training_censoring")),
                           j.at("seed").get<std::uint64_t>());
}

// ---------------------------------------------------------------------------

SuperLearnerModel fit_super_learner(const SurvivalDataset& data, const SuperLearnerConfig& config) {
  if (config.specs.empty()) throw InputError("empty_pool", "the learner pool is empty");
  if (!(config.tau > 0.0)) throw InputError("invalid_horizon", "horizon must be positive");
  if (config.k_folds < 2 || static_cast<std::size_t>(config.k_folds) > data.size()) {
    throw InputError("invalid_folds", "k_folds must lie in [2, n]");
  }
  for (const auto& s : config.specs) (void)s.validated();

  std::vector<LearnerSpec> pool = config.specs;
  SurvivalDataset working = data;
  std::optional<ScreeningInfo> screening;
  if (config.screening.enabled) {
    pool.erase(std::remove_if(pool.begin(), pool.end(),
                              [](const LearnerSpec& s) { return s.kind == LearnerKind::elasticnet_cox; }),
               pool.end());
    if (pool.empty()) {
      throw InputError("empty_pool", "with screening enabled the elastic-net learner leaves the pool, "
                                     "and no other learner remains");
    }
    const auto retained = screen_elasticnet(data, config.screening.alpha, config.screening.lambda);
    working = data.select_covariates(retained);
    screening = ScreeningInfo{config.screening.alpha, config.screening.lambda,
                              config.screening.within_folds, working.covariate_names()};
  }

  const auto folds = split_folds(working, config.k_folds, derive_seed(config.seed, 1));
  CvOptions cv_options;
  cv_options.seed = config.seed;
  cv_options.tuning_loss = config.loss;
  cv_options.inner_folds = config.inner_folds;
  cv_options.ipcw = config.ipcw;
  cv_options.exec = config.exec;
  if (config.screening.enabled && config.screening.within_folds) {
    cv_options.fold_screening = config.screening;
    // Folds see every covariate and screen for themselves.
    working = data;
  }
  CvPredictions cv = cv_predictions(pool, working, folds, config.tau, cv_options);
  if (config.screening.enabled && config.screening.within_folds) {
    working = data.select_covariates(data.column_indices(screening->retained));
  }

  const CensoringModel censoring = fit_censoring_km(data);
  const IpcwWeights weights = ipcw_weights(censoring, data, config.tau, config.ipcw);
  std::vector<LearnerWarning> warnings = cv.warnings;

  // Full-data refits of the surviving candidates.
  std::vector<LearnerPtr> fitted(cv.kept.size());
  std::vector<LearnerSpec> final_specs(cv.kept.size());
  std::vector<std::optional<LearnerWarning>> refit_failures(cv.kept.size());
  parallel_for(cv.kept.size(), config.exec, [&](std::size_t c) {
    const auto k = cv.kept[c];
    LearnerSpec spec = pool[k];
    try {
      if (!spec.tuning_grid.empty()) {
        spec = tune_hyperparameters(spec, working, config.loss, config.tau, config.inner_folds,
                                    derive_seed(config.seed, 4, k * 1000 + 999), config.ipcw)
                   .selected;
      }
      final_specs[c] = spec.validated();
      final_specs[c].tuning_grid.clear();
      fitted[c] = fit_learner(spec, working, derive_seed(config.seed, 3, k));
    } catch (const Error& e) {
      refit_failures[c] = LearnerWarning{pool[k].label(), e.code(),
                                         std::string("dropped after full-data refit failed: ") + e.what(), -1};
    }
  });
  std::vector<Eigen::Index> columns;
  std::vector<LearnerPtr> candidates;
  std::vector<LearnerSpec> specs;
  for (std::size_t c = 0; c < cv.kept.size(); ++c) {
    if (refit_failures[c]) {
      warnings.push_back(*refit_failures[c]);
      continue;
    }
    columns.push_back(static_cast<Eigen::Index>(c));
    candidates.push_back(fitted[c]);
    specs.push_back(final_specs[c]);
  }
  if (candidates.empty()) {
    throw NumericalError("all_learners_failed", "every candidate learner failed on the full data");
  }
  Eigen::MatrixXd oof(cv.risk.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) oof.col(static_cast<Eigen::Index>(c)) = cv.risk.col(columns[c]);

  const WeightOptimization opt = optimize_weights(oof, config.loss, weights, derive_seed(config.seed, 5));
  CvReport report;
  report.loss = config.loss;
  report.tau = config.tau;
  report.folds = config.k_folds;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    report.learners.push_back(specs[c].label());
    report.learner_losses.push_back(opt.vertex_losses[static_cast<Eigen::Index>(c)]);
  }
  report.ensemble_loss = opt.loss;
  report.weight_method = opt.method;

  return SuperLearnerModel(std::move(specs), std::move(candidates), opt.weights, config.loss,
                           config.tau, std::move(report), std::move(screening),
                           data.covariate_names(), std::move(warnings), censoring, config.seed);
}

}  // namespace survsl
