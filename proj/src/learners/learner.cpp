#include "survsl/learners/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "survsl/error.hpp"
#include "survsl/learners/aft.hpp"
#include "survsl/learners/cox.hpp"
#include "survsl/learners/forest.hpp"
#include "survsl/learners/neural.hpp"
#include "survsl/learners/royston_parmar.hpp"

namespace survsl {

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::cox_main_terms: return "cox_main_terms";
    case LearnerKind::weibull_aft: return "weibull_aft";
    case LearnerKind::gamma_aft: return "gamma_aft";
    case LearnerKind::elasticnet_cox: return "elasticnet_cox";
    case LearnerKind::royston_parmar: return "royston_parmar";
    case LearnerKind::random_survival_forest: return "random_survival_forest";
    case LearnerKind::survival_neural_network: return "survival_neural_network";
  }
  return "unknown";
}

const std::vector<LearnerKind>& all_learner_kinds() {
  static const std::vector<LearnerKind> kinds{
      LearnerKind::cox_main_terms,         LearnerKind::weibull_aft,
      LearnerKind::gamma_aft,              LearnerKind::elasticnet_cox,
      LearnerKind::royston_parmar,         LearnerKind::random_survival_forest,
      LearnerKind::survival_neural_network};
  return kinds;
}

LearnerKind learner_kind_from_string(std::string_view name) {
  for (auto kind : all_learner_kinds()) {
    if (to_string(kind) == name) return kind;
  }
  if (name == "cox") return LearnerKind::cox_main_terms;
  if (name == "enet" || name == "elasticnet") return LearnerKind::elasticnet_cox;
  if (name == "rp") return LearnerKind::royston_parmar;
  if (name == "rsf") return LearnerKind::random_survival_forest;
  if (name == "nn" || name == "survival_nn") return LearnerKind::survival_neural_network;
  throw InputError("unknown_learner", "unknown learner kind '" + std::string(name) + "'");
}

namespace {

struct Range {
  double lo;
  double hi;
  bool integer;
};

// Valid hyperparameter ranges per kind, inclusive.
std::map<std::string, Range> valid_ranges(LearnerKind kind) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (kind) {
    case LearnerKind::elasticnet_cox:
      return {{"alpha", {0.0, 1.0, false}}, {"lambda", {0.0, inf, false}}};
    case LearnerKind::royston_parmar:
      return {{"k", {1.0, 10.0, true}}};
    case LearnerKind::random_survival_forest:
      return {{"ntree", {1.0, 100000.0, true}},
              {"mtry", {1.0, 10000.0, true}},
              {"nodesize", {1.0, inf, true}},
              {"nsplit", {0.0, 100000.0, true}}};
    case LearnerKind::survival_neural_network:
      return {{"n_nodes", {1.0, 10000.0, true}},
              {"decay", {0.0, inf, false}},
              {"batch_size", {1.0, inf, true}},
              {"epochs", {0.0, 1e6, true}},
              {"learning_rate", {0.0, inf, false}},
              {"init_output_zero", {0.0, 1.0, true}}};
    default:
      return {};
  }
}

}  // namespace

LearnerSpec LearnerSpec::defaults(LearnerKind kind) {
  LearnerSpec spec;
  spec.kind = kind;
  switch (kind) {
    case LearnerKind::elasticnet_cox:
      spec.hyperparameters = {{"alpha", 0.9}, {"lambda", 0.003}};
      break;
    case LearnerKind::royston_parmar:
      spec.hyperparameters = {{"k", 3.0}};
      break;
    case LearnerKind::random_survival_forest:
      spec.hyperparameters = {{"ntree", 500.0}, {"mtry", 3.0}, {"nodesize", 20.0}, {"nsplit", 10.0}};
      break;
    case LearnerKind::survival_neural_network:
      spec.hyperparameters = {{"n_nodes", 20.0},   {"decay", 0.1},          {"batch_size", 256.0},
                              {"epochs", 1.0},     {"learning_rate", 0.01}, {"init_output_zero", 0.0}};
      break;
    default:
      break;
  }
  return spec;
}

double LearnerSpec::get(const std::string& name) const {
  if (auto it = hyperparameters.find(name); it != hyperparameters.end()) return it->second;
  const auto d = defaults(kind);
  if (auto it = d.hyperparameters.find(name); it != d.hyperparameters.end()) return it->second;
  throw InputError("unknown_hyperparameter",
                   "learner " + label() + " has no hyperparameter '" + name + "'");
}

LearnerSpec LearnerSpec::validated() const {
  const auto ranges = valid_ranges(kind);
  LearnerSpec out = defaults(kind);
  out.tuning_grid = tuning_grid;
  auto check = [&](const std::string& name, double value) {
    auto it = ranges.find(name);
    if (it == ranges.end()) {
      throw InputError("unknown_hyperparameter",
                       "learner " + label() + " has no hyperparameter '" + name + "'");
    }
    const Range& r = it->second;
    if (!(value >= r.lo && value <= r.hi) || (r.integer && value != std::floor(value))) {
      throw InputError("invalid_hyperparameter",
                       "hyperparameter " + name + " = " + std::to_string(value) +
                           " is out of range for " + label(),
                       {{"learner", label()}, {"name", name}, {"value", value}});
    }
  };
  for (const auto& [name, value] : hyperparameters) {
    check(name, value);
    out.hyperparameters[name] = value;
  }
  for (const auto& [name, values] : tuning_grid) {
    if (values.empty()) {
      throw InputError("empty_tuning_grid", "tuning grid for " + name + " has no values");
    }
    for (double v : values) check(name, v);
  }
  return out;
}

nlohmann::json LearnerSpec::to_json() const {
  nlohmann::json j{{"kind", label()}, {"hyperparameters", hyperparameters}};
  if (!tuning_grid.empty()) j["tuning_grid"] = tuning_grid;
  return j;
}

LearnerSpec LearnerSpec::from_json(const nlohmann::json& j) {
  LearnerSpec spec;
  if (j.is_string()) {
    spec.kind = learner_kind_from_string(j.get<std::string>());
    return spec;
  }
  spec.kind = learner_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("hyperparameters")) spec.hyperparameters = j.at("hyperparameters").get<Hyperparameters>();
  if (j.contains("tuning_grid")) spec.tuning_grid = j.at("tuning_grid").get<TuningGrid>();
  return spec;
}

// ---------------------------------------------------------------------------

FittedLearner::FittedLearner(LearnerKind kind, Hyperparameters hyperparameters,
                             TrainingInfo training, std::vector<std::string> feature_names)
    : kind_(kind),
      hyperparameters_(std::move(hyperparameters)),
      training_(training),
      feature_names_(std::move(feature_names)) {}

Eigen::VectorXd FittedLearner::predict_survival(const Eigen::MatrixXd& covariates, double t) const {
  if (covariates.cols() != static_cast<Eigen::Index>(feature_names_.size())) {
    throw InputError("dimension_mismatch",
                     std::string(to_string(kind_)) + " was trained on " +
                         std::to_string(feature_names_.size()) + " covariates but got " +
                         std::to_string(covariates.cols()));
  }
  if (!(t >= 0.0)) throw InputError("invalid_time", "prediction time must be >= 0");
  if (t == 0.0) return Eigen::VectorXd::Ones(covariates.rows());
  Eigen::VectorXd s = survival_at(covariates, t);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (std::isnan(s[i])) {
      throw NumericalError("nan_prediction", std::string(to_string(kind_)) +
                                                 " produced a NaN survival probability");
    }
    s[i] = std::clamp(s[i], 0.0, 1.0);
  }
  return s;
}

nlohmann::json FittedLearner::to_json() const {
  return {{"format_version", kFormatVersion},
          {"kind", std::string(to_string(kind_))},
          {"hyperparameters", hyperparameters_},
          {"training", {{"n", training_.n}, {"p", training_.p}, {"events", training_.events},
                        {"seed", training_.seed}}},
          {"feature_names", feature_names_},
          {"parameters", parameters_json()}};
}

Eigen::VectorXd predict_survival(const SurvivalPredictor& model, const Eigen::MatrixXd& covariates,
                                 double t) {
  return model.predict_survival(covariates, t);
}

void require_fittable(const SurvivalDataset& data, std::string_view learner) {
  if (data.size() == 0) {
    throw InputError("empty_dataset", std::string(learner) + " cannot be fit on an empty dataset");
  }
  if (data.event_count() == 0) {
    throw InputError("no_events", std::string(learner) + " needs at least one observed event");
  }
}

LearnerPtr fit_learner(const LearnerSpec& raw, const SurvivalDataset& data, std::uint64_t seed,
                       const Execution& exec) {
  const LearnerSpec spec = raw.validated();
  switch (spec.kind) {
    case LearnerKind::cox_main_terms: return fit_cox(data, spec);
    case LearnerKind::weibull_aft: return fit_weibull_aft(data, spec);
    case LearnerKind::gamma_aft: return fit_gamma_aft(data, spec);
    case LearnerKind::elasticnet_cox: return fit_elasticnet_cox(data, spec);
    case LearnerKind::royston_parmar: return fit_royston_parmar(data, spec);
    case LearnerKind::random_survival_forest: return fit_random_survival_forest(data, spec, seed, exec);
    case LearnerKind::survival_neural_network: return fit_survival_nn(data, spec, seed);
  }
  throw InputError("unknown_learner", "unknown learner kind");
}

LearnerPtr learner_from_json(const nlohmann::json& j) {
  const int version = j.value("format_version", 0);
  if (version != FittedLearner::kFormatVersion) {
    throw InputError("unsupported_format",
                     "learner document has format_version " + std::to_string(version) +
                         ", expected " + std::to_string(FittedLearner::kFormatVersion));
  }
  const auto kind = learner_kind_from_string(j.at("kind").get<std::string>());
  auto hp = j.at("hyperparameters").get<Hyperparameters>();
  const auto& t = j.at("training");
  TrainingInfo info{t.at("n").get<std::size_t>(), t.at("p").get<std::size_t>(),
                    t.at("events").get<std::size_t>(), t.at("seed").get<std::uint64_t>()};
  auto names = j.at("feature_names").get<std::vector<std::string>>();
  const auto& params = j.at("parameters");
  switch (kind) {
    case LearnerKind::cox_main_terms:
    case LearnerKind::elasticnet_cox:
      return ProportionalHazardsModel::from_parameters(kind, std::move(hp), info, std::move(names), params);
    case LearnerKind::weibull_aft:
    case LearnerKind::gamma_aft:
      return AftModel::from_parameters(kind, std::move(hp), info, std::move(names), params);
    case LearnerKind::royston_parmar:
      return RoystonParmarModel::from_parameters(std::move(hp), info, std::move(names), params);
    case LearnerKind::random_survival_forest:
      return RandomSurvivalForest::from_parameters(std::move(hp), info, std::move(names), params);
    case LearnerKind::survival_neural_network:
      return SurvivalNeuralNetwork::from_parameters(std::move(hp), info, std::move(names), params);
  }
  throw InputError("unknown_learner", "unknown learner kind");
}

}  // namespace survsl
