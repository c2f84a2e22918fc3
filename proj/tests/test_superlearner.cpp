#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "survsl/censoring.hpp"
#include "survsl/error.hpp"
#include "survsl/learners/cox.hpp"
#include "survsl/losses.hpp"
#include "survsl/numeric.hpp"
#include "survsl/superlearner.hpp"

using namespace survsl;

namespace {

std::vector<double> col(const Eigen::MatrixXd& m, Eigen::Index c) {
  return {m.col(c).data(), m.col(c).data() + m.rows()};
}

void check_vertex_dominance(const SuperLearnerModel& model) {
  const auto& cv = model.cv_report();
  const double best = *std::min_element(cv.learner_losses.begin(), cv.learner_losses.end());
  CHECK(cv.ensemble_loss <= best + 1e-9);
}

SurvivalDataset kidney(std::size_t n, std::uint64_t seed) {
  return generate_cohort(n, Era::development, DriftSpec{{}, 1.0, 1.0, seed}, GeneratorModel::kidney_transplant()).data;
}

}  // namespace

TEST_CASE("combination rule") {
  Eigen::MatrixXd risks(3, 2);
  risks << 0.2, 0.8, 0.3, 0.3, 0.0, 0.9;
  SUBCASE("one-hot weights return the clipped column") {
    const Eigen::VectorXd c = combine_risks(risks, Eigen::Vector2d(0, 1));
    for (int i = 0; i < 3; ++i) CHECK(c[i] == doctest::Approx(clip_probability(risks(i, 1))).epsilon(1e-14));
    const Eigen::VectorXd c0 = combine_risks(risks, Eigen::Vector2d(1, 0));
    CHECK(c0[2] == doctest::Approx(1e-12).epsilon(1e-6));
  }
  SUBCASE("agreeing learners") {
    CHECK(combine_risks(risks, Eigen::Vector2d(0.37, 0.63))[1] == doctest::Approx(0.3).epsilon(1e-14));
  }
  SUBCASE("symmetric logits cancel") {
    CHECK(combine_risks(risks, Eigen::Vector2d(0.5, 0.5))[0] == doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("weight optimization") {
  const auto data = kidney(600, 3);
  const auto w = ipcw_weights(fit_censoring_km(data), data, 7.0);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.01, 0.6);
  SUBCASE("single column") {
    Eigen::MatrixXd oof(600, 1);
    for (int i = 0; i < 600; ++i) oof(i, 0) = u(gen);
    const auto opt = optimize_weights(oof, LossKind::ipcw_brier, w);
    CHECK(opt.weights.size() == 1);
    CHECK(opt.weights[0] == 1.0);
  }
  SUBCASE("identical columns tie-break to the first vertex") {
    Eigen::MatrixXd oof(600, 2);
    for (int i = 0; i < 600; ++i) oof(i, 0) = oof(i, 1) = u(gen);
    for (auto loss : {LossKind::ipcw_brier, LossKind::negative_binomial_loglik, LossKind::auroc_t}) {
      const auto opt = optimize_weights(oof, loss, w);
      CHECK(opt.weights[0] == 1.0);
      CHECK(opt.weights[1] == 0.0);
      CHECK(opt.loss == evaluate_loss(loss, col(oof, 0), w));
    }
  }
  SUBCASE("three learners agree with a simplex grid search") {
    Eigen::MatrixXd oof(600, 3);
    std::normal_distribution<double> z(0, 1);
    for (int i = 0; i < 600; ++i) {
      const double base = -2.0 + 0.4 * data.covariates()(i, 3) * 3;
      for (int k = 0; k < 3; ++k) oof(i, k) = oracle::expit(base + 0.7 * z(gen));
    }
    for (auto loss : {LossKind::ipcw_brier, LossKind::negative_binomial_loglik}) {
      const auto opt = optimize_weights(oof, loss, w, 9);
      const double grid = oracle::simplex_grid_min(
          [&](const Eigen::Vector3d& v) {
            std::vector<double> r(600);
            for (int i = 0; i < 600; ++i) {
              double s = 0;
              for (int k = 0; k < 3; ++k) s += v[k] * oracle::logit(std::clamp(oof(i, k), 1e-12, 1 - 1e-12));
              r[i] = oracle::expit(s);
            }
            return evaluate_loss(loss, r, w);
          });
      CHECK(std::abs(opt.loss - grid) < 1e-4);
      CHECK(opt.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK((opt.weights.array() >= 0).all());
      CHECK(opt.loss <= opt.vertex_losses.minCoeff() + 1e-12);
    }
  }
}

TEST_CASE("out-of-fold predictions") {
  SUBCASE("a constant learner gives one value per fold") {
    const auto data = kidney(200, 5);
    LearnerSpec flat = LearnerSpec::defaults(LearnerKind::survival_neural_network);
    flat.hyperparameters["epochs"] = 0;
    flat.hyperparameters["init_output_zero"] = 1;
    const auto folds = split_folds(data, 5, 1);
    const auto cv = cv_predictions({flat}, data, folds, 7.0);
    for (int f = 0; f < 5; ++f) {
      const auto members = fold_members(folds, f);
      for (auto i : members) CHECK(cv.risk(static_cast<Eigen::Index>(i), 0) == cv.risk(static_cast<Eigen::Index>(members[0]), 0));
    }
  }
  SUBCASE("leave-one-out is reproducible") {
    const auto data = oracle::weibull_ph(20, {0.8}, 1.2, 3.0, 0.05, 6);
    const auto folds = split_folds(data, 20, 2);
    const std::vector<LearnerSpec> pool{LearnerSpec::defaults(LearnerKind::cox_main_terms)};
    const auto a = cv_predictions(pool, data, folds, 2.0);
    const auto b = cv_predictions(pool, data, folds, 2.0);
    CHECK(a.risk == b.risk);
  }
  SUBCASE("Cox out-of-fold discrimination matches a held-out test set") {
    const auto train = oracle::weibull_ph(2000, {1.0, -0.7}, 1.2, 6.0, 0.05, 7);
    const auto test = oracle::weibull_ph(2000, {1.0, -0.7}, 1.2, 6.0, 0.05, 8);
    const std::vector<LearnerSpec> pool{LearnerSpec::defaults(LearnerKind::cox_main_terms)};
    const auto cv = cv_predictions(pool, train, split_folds(train, 10, 3), 5.0);
    const double oof_auc = ipcw_auc(col(cv.risk, 0), ipcw_weights(fit_censoring_km(train), train, 5.0));
    const auto full = fit_cox(train);
    const Eigen::VectorXd r = full->predict_risk(test.covariates(), 5.0);
    const double test_auc = ipcw_auc(std::vector<double>(r.data(), r.data() + r.size()),
                                     ipcw_weights(fit_censoring_km(test), test, 5.0));
    CHECK(std::abs(oof_auc - test_auc) < 0.05);
  }
  SUBCASE("parallel and serial cross-validation agree") {
    const auto data = kidney(300, 9);
    const auto folds = split_folds(data, 5, 1);
    std::vector<LearnerSpec> pool{LearnerSpec::defaults(LearnerKind::cox_main_terms),
                                  LearnerSpec::defaults(LearnerKind::random_survival_forest)};
    pool[1].hyperparameters["ntree"] = 20;
    CvOptions serial, parallel;
    parallel.exec.workers = 4;
    CHECK(cv_predictions(pool, data, folds, 7.0, serial).risk == cv_predictions(pool, data, folds, 7.0, parallel).risk);
  }
}

TEST_CASE("super learner with a single Cox learner is the Cox fit") {
  const auto data = kidney(500, 11);
  SuperLearnerConfig config;
  config.specs = {LearnerSpec::defaults(LearnerKind::cox_main_terms)};
  config.k_folds = 5;
  const auto model = fit_super_learner(data, config);
  REQUIRE(model.weights().size() == 1);
  CHECK(model.weights()[0] == 1.0);
  const auto cox = fit_cox(data);
  const Eigen::MatrixXd x = data.covariates().topRows(20);
  const Eigen::VectorXd a = model.predict_risk_at(x, 7.0);
  const Eigen::VectorXd b = cox->predict_risk(x, 7.0);
  for (int i = 0; i < 20; ++i) CHECK(a[i] == doctest::Approx(clip_probability(b[i])).epsilon(1e-14));
  check_vertex_dominance(model);
}

TEST_CASE("Cox outweighs the forest on proportional-hazards data") {
  const auto data = kidney(1000, 12);
  SuperLearnerConfig config;
  config.specs = {LearnerSpec::defaults(LearnerKind::cox_main_terms),
                  LearnerSpec::defaults(LearnerKind::random_survival_forest)};
  config.specs[1].hyperparameters["ntree"] = 200;
  config.k_folds = 5;
  const auto model = fit_super_learner(data, config);
  CHECK(model.weights()[0] > model.weights()[1]);
  CHECK(model.weights().sum() == doctest::Approx(1.0).epsilon(1e-12));
  check_vertex_dominance(model);
}

TEST_CASE("failing learners are dropped with a warning") {
  const auto data = kidney(300, 13);
  SuperLearnerConfig config;
  LearnerSpec bad = LearnerSpec::defaults(LearnerKind::random_survival_forest);
  bad.hyperparameters["mtry"] = 50;
  config.specs = {bad, LearnerSpec::defaults(LearnerKind::weibull_aft)};
  config.k_folds = 3;
  const auto model = fit_super_learner(data, config);
  REQUIRE(model.specs().size() == 1);
  CHECK(model.specs()[0].kind == LearnerKind::weibull_aft);
  REQUIRE_FALSE(model.warnings().empty());
  CHECK(model.warnings()[0].learner == "random_survival_forest");

  config.specs = {bad};
  try {
    fit_super_learner(data, config);
    FAIL("expected all_learners_failed");
  } catch (const NumericalError& e) {
    CHECK(e.code() == "all_learners_failed");
  }
}

TEST_CASE("every loss keeps the ensemble at or below the best vertex") {
  const auto data = kidney(400, 14);
  for (auto loss : {LossKind::ipcw_brier, LossKind::negative_binomial_loglik, LossKind::auroc_t}) {
    SuperLearnerConfig config;
    config.specs = {LearnerSpec::defaults(LearnerKind::cox_main_terms),
                    LearnerSpec::defaults(LearnerKind::weibull_aft),
                    LearnerSpec::defaults(LearnerKind::random_survival_forest)};
    config.specs[2].hyperparameters["ntree"] = 50;
    config.loss = loss;
    config.k_folds = 4;
    config.seed = 3;
    const auto model = fit_super_learner(data, config);
    check_vertex_dominance(model);
    CHECK(model.weights().sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("model JSON round trip") {
  const auto data = kidney(300, 15);
  SuperLearnerConfig config;
  config.specs = {LearnerSpec::defaults(LearnerKind::cox_main_terms),
                  LearnerSpec::defaults(LearnerKind::royston_parmar)};
  config.k_folds = 3;
  const auto model = fit_super_learner(data, config);
  const auto text = model.to_json().dump();
  const auto back = SuperLearnerModel::from_json(nlohmann::json::parse(text));
  CHECK(back.to_json().dump() == text);
  CHECK(back.predict_risk_at(data.covariates(), 7.0) == model.predict_risk_at(data.covariates(), 7.0));
  CHECK(model.predict_risk_at(data.covariates(), 0.0) == Eigen::VectorXd::Zero(300));
}

TEST_CASE("elastic-net screening") {
  std::vector<double> lp;
  const auto data = oracle::weibull_ph(3000, {0.8, 0.0, -0.6, 0.0, 0.0}, 1.2, 5.0, 0.08, 16, &lp);
  SUBCASE("lambda 0 keeps everything") {
    CHECK(screen_elasticnet(data, 0.2, 0.0).size() == 5);
  }
  SUBCASE("a huge lambda keeps nothing") {
    CHECK_THROWS_AS(screen_elasticnet(data, 0.2, 1e3), InputError);
  }
  SUBCASE("signal covariates survive a moderate penalty") {
    const auto kept = screen_elasticnet(data, 0.2, 0.028);
    CHECK(std::find(kept.begin(), kept.end(), 0) != kept.end());
    CHECK(std::find(kept.begin(), kept.end(), 2) != kept.end());
  }
  SUBCASE("screening removes the elastic net from the pool") {
    SuperLearnerConfig config;
    config.specs = {LearnerSpec::defaults(LearnerKind::cox_main_terms),
                    LearnerSpec::defaults(LearnerKind::elasticnet_cox)};
    config.screening.enabled = true;
    config.k_folds = 3;
    std::vector<std::size_t> rows(600);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto model = fit_super_learner(data.subset(rows), config);
    REQUIRE(model.specs().size() == 1);
    CHECK(model.specs()[0].kind == LearnerKind::cox_main_terms);
    REQUIRE(model.screening());
    CHECK(model.candidates()[0]->feature_names() == model.screening()->retained);
    CHECK(model.feature_names().size() == 5);
  }
}
