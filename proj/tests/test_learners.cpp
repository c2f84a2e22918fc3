#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "survsl/censoring.hpp"
#include "survsl/error.hpp"
#include "survsl/learners/aft.hpp"
#include "survsl/learners/cox.hpp"
#include "survsl/learners/forest.hpp"
#include "survsl/learners/learner.hpp"
#include "survsl/learners/neural.hpp"
#include "survsl/learners/royston_parmar.hpp"
#include "survsl/learners/tuning.hpp"
#include "survsl/losses.hpp"

using namespace survsl;

namespace {

// Nelson-Aalen cumulative hazard at t with row multiplicities.
double naive_nelson_aalen(const std::vector<double>& t, const std::vector<int>& e, const std::vector<double>& m,
                          double at) {
  std::vector<double> event_times;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (e[i] && m[i] > 0 && t[i] <= at) event_times.push_back(t[i]);
  }
  std::sort(event_times.begin(), event_times.end());
  event_times.erase(std::unique(event_times.begin(), event_times.end()), event_times.end());
  double h = 0.0;
  for (double s : event_times) {
    double d = 0, r = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] >= s) r += m[i];
      if (t[i] == s && e[i]) d += m[i];
    }
    h += d / r;
  }
  return h;
}

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

LearnerSpec spec_with(LearnerKind kind, Hyperparameters hp) {
  LearnerSpec s = LearnerSpec::defaults(kind);
  for (auto& [k, v] : hp) s.hyperparameters[k] = v;
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Cox

TEST_CASE("Cox partial likelihood matches direct summation and finite differences") {
  std::vector<double> lp;
  const auto data = oracle::weibull_ph(300, {0.5, -0.3, 0.2}, 1.2, 5.0, 0.1, 4, &lp);
  std::vector<double> t(data.times().begin(), data.times().end());
  std::vector<int> e(data.events().begin(), data.events().end());
  for (auto& v : t) v = std::round(v * 4) / 4 + 0.25;  // force ties
  const Eigen::VectorXd beta = Eigen::Vector3d(0.3, -0.1, 0.4);
  const auto pl = cox_partial_likelihood(data.covariates(), t, e, beta);
  CHECK(pl.loglik == doctest::Approx(oracle::partial_loglik(data.covariates(), t, e, beta)).epsilon(1e-12));
  for (int j = 0; j < 3; ++j) {
    const double h = 1e-5;
    Eigen::VectorXd up = beta, down = beta;
    up[j] += h;
    down[j] -= h;
    const double fd = (oracle::partial_loglik(data.covariates(), t, e, up) -
                       oracle::partial_loglik(data.covariates(), t, e, down)) / (2 * h);
    CHECK(std::abs(pl.gradient[j] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("Cox recovers log(2) in a two-group exponential simulation") {
  double total = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto data = oracle::exponential_groups(2000, 0.1, 2.0, 0.02, 99 + rep);
    const auto model = fit_cox(data);
    const double b = model->coefficients()[0];
    const double se = model->standard_errors()[0];
    CHECK(se > 0.0);
    CHECK(std::abs(b - std::log(2.0)) < 4 * se);
    total += b;
  }
  CHECK(total / 20 > 0.593);
  CHECK(total / 20 < 0.793);
}

TEST_CASE("Cox on a null covariate") {
  int small_z = 0;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> lp;
    auto data = oracle::weibull_ph(2000, {0.0}, 1.0, 5.0, 0.1, 100 + rep, &lp);
    const auto model = fit_cox(data);
    CHECK(std::abs(model->coefficients()[0]) < 0.1);
    small_z += std::abs(model->coefficients()[0] / model->standard_errors()[0]) < 2.0;
  }
  CHECK(small_z >= 16);
}

TEST_CASE("Cox needs covariates") {
  const auto data = oracle::make_dataset({1, 2, 3}, {1, 1, 0});
  CHECK_THROWS_AS(fit_cox(data), InputError);
}

TEST_CASE("Cox at the training mean predicts the baseline survival") {
  const auto data = oracle::weibull_ph(500, {0.7, -0.4}, 1.3, 4.0, 0.1, 12);
  const auto model = fit_cox(data);
  Eigen::MatrixXd xbar = model->means().transpose();
  for (double t : {0.5, 1.0, 3.0, 6.0}) {
    CHECK(model->predict_survival(xbar, t)[0] ==
          doctest::Approx(std::exp(-model->baseline_cumulative_hazard()(t))).epsilon(1e-12));
  }
}

TEST_CASE("prediction contract holds for every learner") {
  const auto data = oracle::weibull_ph(400, {0.8, -0.5, 0.3}, 1.3, 5.0, 0.08, 21);
  const Eigen::MatrixXd x = data.covariates().topRows(25);
  for (const auto kind : all_learner_kinds()) {
    CAPTURE(to_string(kind));
    auto spec = LearnerSpec::defaults(kind);
    if (kind == LearnerKind::random_survival_forest) spec.hyperparameters["ntree"] = 50;
    if (kind == LearnerKind::survival_neural_network) spec.hyperparameters["epochs"] = 5;
    const auto model = fit_learner(spec, data, 5);
    CHECK(model->predict_survival(x, 0.0) == Eigen::VectorXd::Ones(25));
    Eigen::VectorXd previous = Eigen::VectorXd::Ones(25);
    for (double t = 0.25; t <= 12.0; t += 0.25) {
      const Eigen::VectorXd s = model->predict_survival(x, t);
      CHECK((s.array() <= previous.array() + 1e-15).all());
      CHECK((s.array() >= 0.0).all());
      previous = s;
    }
    // Serialization keeps predictions.
    const auto back = learner_from_json(nlohmann::json::parse(model->to_json().dump()));
    CHECK(back->predict_survival(x, 3.0) == model->predict_survival(x, 3.0));
    CHECK_THROWS_AS(model->predict_survival(x, -1.0), InputError);
    CHECK_THROWS_AS(model->predict_survival(Eigen::MatrixXd::Zero(2, 5), 1.0), InputError);
  }
}

// ---------------------------------------------------------------------------
// Elastic net

TEST_CASE("elastic net with lambda 0 matches the Cox fit") {
  const auto data = oracle::weibull_ph(500, {0.6, -0.4, 0.0, 0.3}, 1.2, 5.0, 0.1, 31);
  const auto cox = fit_cox(data);
  const auto enet = fit_elasticnet_cox(data, spec_with(LearnerKind::elasticnet_cox, {{"lambda", 0.0}}));
  for (int j = 0; j < 4; ++j) CHECK(std::abs(enet->coefficients()[j] - cox->coefficients()[j]) < 1e-4);
}

TEST_CASE("large lambda shrinks every coefficient to exactly zero") {
  const auto data = oracle::weibull_ph(300, {0.6, -0.4}, 1.2, 5.0, 0.1, 32);
  const auto enet = fit_elasticnet_cox(data, spec_with(LearnerKind::elasticnet_cox, {{"lambda", 1e3}}));
  CHECK(enet->coefficients() == Eigen::VectorXd::Zero(2));
}

TEST_CASE("lasso keeps at most one of two duplicated columns") {
  std::vector<double> lp;
  const auto base = oracle::weibull_ph(400, {0.8, 0.4}, 1.2, 5.0, 0.1, 33, &lp);
  Eigen::MatrixXd x(400, 3);
  x.col(0) = base.covariates().col(0);
  x.col(1) = base.covariates().col(0);
  x.col(2) = base.covariates().col(1);
  const auto data = oracle::make_dataset({base.times().begin(), base.times().end()},
                                         {base.events().begin(), base.events().end()}, x);
  const auto enet =
      fit_elasticnet_cox(data, spec_with(LearnerKind::elasticnet_cox, {{"alpha", 1.0}, {"lambda", 0.01}}));
  const int nonzero = (enet->coefficients()[0] != 0.0) + (enet->coefficients()[1] != 0.0);
  CHECK(nonzero <= 1);
  CHECK(enet->coefficients()[2] > 0.0);
}

// ---------------------------------------------------------------------------
// AFT

TEST_CASE("Weibull AFT recovers a location coefficient") {
  std::mt19937_64 gen(41);
  std::normal_distribution<double> z(0, 1);
  std::uniform_real_distribution<double> u(0, 1);
  const int n = 3000;
  std::vector<double> t(n);
  std::vector<int> e(n);
  Eigen::MatrixXd x(n, 1);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = z(gen);
    const double w = std::log(-std::log(1 - u(gen)));  // standard minimum extreme value
    const double time = std::exp(1.5 + 0.5 * x(i, 0) + 0.7 * w);
    const double c = -std::log(1 - u(gen)) / 0.05;
    t[i] = std::min(time, c);
    e[i] = time <= c;
  }
  const auto model = fit_weibull_aft(oracle::make_dataset(t, e, x));
  CHECK(std::abs(model->coefficients()[0] - 0.5) < 0.1);
  CHECK(model->shape_parameter() == doctest::Approx(0.7).epsilon(0.1));
}

TEST_CASE("covariate-free Weibull AFT is the Weibull MLE") {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> t(3000);
  for (auto& v : t) v = 2.0 * std::pow(-std::log(1 - u(gen)), 1.0 / 1.5);
  // Uncensored Weibull MLE: solve 1/k + mean(log t) - sum t^k log t / sum t^k = 0.
  auto score = [&](double k) {
    double a = 0, b = 0, c = 0;
    for (double v : t) {
      a += std::pow(v, k) * std::log(v);
      b += std::pow(v, k);
      c += std::log(v);
    }
    return 1 / k + c / t.size() - a / b;
  };
  double lo = 0.1, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (score(mid) > 0 ? lo : hi) = mid;
  }
  const double k = 0.5 * (lo + hi);
  double mean_tk = 0;
  for (double v : t) mean_tk += std::pow(v, k) / t.size();
  const double scale = std::pow(mean_tk, 1 / k);
  CHECK(k == doctest::Approx(1.5).epsilon(0.1));
  CHECK(scale == doctest::Approx(2.0).epsilon(0.05));

  const auto model = fit_weibull_aft(oracle::make_dataset(t, std::vector<int>(3000, 1)));
  const Eigen::MatrixXd x0 = Eigen::MatrixXd::Zero(1, 0);
  for (double s : {0.5, 1.0, 2.0, 4.0}) {
    CHECK(model->predict_survival(x0, s)[0] ==
          doctest::Approx(std::exp(-std::pow(s / scale, k))).epsilon(1e-5));
  }
}

TEST_CASE("Weibull AFT without event information is an error") {
  const auto data = oracle::make_dataset({5, 5, 5, 5}, {0, 0, 0, 0});
  CHECK_THROWS_AS(fit_weibull_aft(data), Error);
}

TEST_CASE("gamma AFT with exponential data matches the exponential AFT") {
  std::mt19937_64 gen(43);
  std::normal_distribution<double> z(0, 1);
  std::uniform_real_distribution<double> u(0, 1);
  const int n = 3000;
  std::vector<double> t(n), xs(n);
  std::vector<int> e(n);
  Eigen::MatrixXd x(n, 1);
  for (int i = 0; i < n; ++i) {
    xs[i] = x(i, 0) = z(gen);
    const double time = std::exp(1.8 + 0.5 * xs[i]) * -std::log(1 - u(gen));
    const double c = -std::log(1 - u(gen)) / 0.05;
    t[i] = std::min(time, c);
    e[i] = time <= c;
  }
  // Exponential AFT MLE by Newton: loglik = sum e_i (-eta_i) - t_i exp(-eta_i).
  double a = 0, b = 0;
  for (int it = 0; it < 100; ++it) {
    double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
    for (int i = 0; i < n; ++i) {
      const double m = t[i] * std::exp(-(a + b * xs[i]));
      g0 += -e[i] + m;
      g1 += (-e[i] + m) * xs[i];
      h00 += m;
      h01 += m * xs[i];
      h11 += m * xs[i] * xs[i];
    }
    const double det = h00 * h11 - h01 * h01;
    a += (h11 * g0 - h01 * g1) / det;
    b += (-h01 * g0 + h00 * g1) / det;
  }
  const auto model = fit_gamma_aft(oracle::make_dataset(t, e, x));
  CHECK(std::abs(model->coefficients()[0] - 0.5) < 0.12);
  const double tau = 7.0;
  for (double xv : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    Eigen::MatrixXd row(1, 1);
    row(0, 0) = xv;
    const double exact = std::exp(-tau * std::exp(-(a + b * xv)));
    CHECK(std::abs(model->predict_survival(row, tau)[0] - exact) < 0.01);
  }
}

TEST_CASE("gamma AFT recovers a location coefficient with non-exponential shape") {
  std::mt19937_64 gen(44);
  std::normal_distribution<double> z(0, 1);
  std::gamma_distribution<double> g(2.5, 1.0);
  std::uniform_real_distribution<double> u(0, 1);
  const int n = 3000;
  std::vector<double> t(n);
  std::vector<int> e(n);
  Eigen::MatrixXd x(n, 1);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = z(gen);
    const double time = std::exp(0.5 + 0.5 * x(i, 0)) * g(gen);
    const double c = -std::log(1 - u(gen)) / 0.05;
    t[i] = std::min(time, c);
    e[i] = time <= c;
  }
  const auto model = fit_gamma_aft(oracle::make_dataset(t, e, x));
  CHECK(std::abs(model->coefficients()[0] - 0.5) < 0.12);
  CHECK(model->shape_parameter() == doctest::Approx(2.5).epsilon(0.15));
}

TEST_CASE("negative times are rejected before fitting") {
  CHECK_THROWS_AS(oracle::make_dataset({-1, 2}, {1, 0}), InputError);
}

TEST_CASE("log upper incomplete gamma stays finite deep in the tail") {
  CHECK(std::isfinite(log_gamma_q(2.0, 800.0)));
  CHECK(log_gamma_q(1.0, 3.0) == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(log_gamma_q(1.0, 900.0) == doctest::Approx(-900.0).epsilon(1e-9));
}

// ---------------------------------------------------------------------------
// Royston-Parmar

TEST_CASE("Royston-Parmar fits Weibull PH survival") {
  std::vector<double> lp;
  const auto data = oracle::weibull_ph(3000, {0.5, -0.5}, 1.4, 8.0, 0.05, 51, &lp);
  const auto model = fit_learner(LearnerSpec::defaults(LearnerKind::royston_parmar), data, 1);
  double worst = 0.0;
  for (double t = 0.05; t <= 7.0; t += 0.05) {
    const double fitted = model->predict_survival(data.covariates(), t).mean();
    double truth = 0.0;
    for (double l : lp) truth += std::exp(-std::pow(t / 8.0, 1.4) * std::exp(l)) / 3000.0;
    worst = std::max(worst, std::abs(fitted - truth));
  }
  CHECK(worst < 0.02);
}

TEST_CASE("Royston-Parmar needs more distinct event times than knots") {
  const auto data = oracle::make_dataset({1, 2, 3, 4, 5, 6}, {1, 1, 1, 0, 0, 0});
  CHECK_THROWS_AS(fit_learner(spec_with(LearnerKind::royston_parmar, {{"k", 5}}), data, 1), Error);
}

TEST_CASE("covariate-free Royston-Parmar smooths the Kaplan-Meier curve") {
  std::mt19937_64 gen(52);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> t(2000);
  std::vector<int> e(2000);
  for (int i = 0; i < 2000; ++i) {
    const double time = 6.0 * std::pow(-std::log(1 - u(gen)), 1 / 0.8);
    const double c = 20 * u(gen);
    t[i] = std::min(time, c);
    e[i] = time <= c;
  }
  const auto data = oracle::make_dataset(t, e);
  const auto model = fit_learner(LearnerSpec::defaults(LearnerKind::royston_parmar), data, 1);
  const auto km = kaplan_meier(t, e);
  const Eigen::MatrixXd x0 = Eigen::MatrixXd::Zero(1, 0);
  double worst = 0;
  for (double s = 0.1; s < 15.0; s += 0.1) worst = std::max(worst, std::abs(model->predict_survival(x0, s)[0] - km(s)));
  CHECK(worst < 0.05);
}

// ---------------------------------------------------------------------------
// Random survival forest

TEST_CASE("a single root-only tree predicts the Nelson-Aalen survival of its bootstrap") {
  const auto data = oracle::weibull_ph(120, {0.8}, 1.2, 5.0, 0.1, 61);
  const auto spec = spec_with(LearnerKind::random_survival_forest,
                              {{"ntree", 1}, {"nodesize", 120}, {"mtry", 1}});
  const auto model = fit_learner(spec, data, 17);
  const auto rows = forest_bootstrap(data.size(), 17, 0);
  std::vector<double> m(data.size(), 0.0);
  for (auto r : rows) m[r] += 1.0;
  std::vector<double> t(data.times().begin(), data.times().end());
  std::vector<int> e(data.events().begin(), data.events().end());
  for (double s : {0.5, 1.0, 2.0, 4.0}) {
    const Eigen::VectorXd pred = model->predict_survival(data.covariates().topRows(5), s);
    const double expected = std::exp(-naive_nelson_aalen(t, e, m, s));
    for (int i = 0; i < 5; ++i) CHECK(pred[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("forest predictions vary less on pure noise than on signal") {
  const auto signal = oracle::weibull_ph(800, {1.0, 0.8, 0.0}, 1.2, 5.0, 0.1, 62);
  const auto noise = oracle::weibull_ph(800, {0.0, 0.0, 0.0}, 1.2, 5.0, 0.1, 63);
  const auto spec = spec_with(LearnerKind::random_survival_forest, {{"ntree", 100}});
  auto spread = [&](const SurvivalDataset& d) {
    const Eigen::VectorXd r = fit_learner(spec, d, 3)->predict_risk(d.covariates(), 3.0);
    return std::sqrt((r.array() - r.mean()).square().mean());
  };
  CHECK(spread(noise) < spread(signal));
}

TEST_CASE("forest discriminates a strong single covariate") {
  const auto train = oracle::exponential_groups(2000, 0.05, 5.0, 0.03, 64);
  const auto test = oracle::exponential_groups(2000, 0.05, 5.0, 0.03, 65);
  // Add a noise column so that mtry = 1 still has a choice.
  auto widen = [](const SurvivalDataset& d, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z(0, 1);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(d.size()), 2);
    x.col(0) = d.covariates().col(0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 1) = z(gen);
    return oracle::make_dataset({d.times().begin(), d.times().end()}, {d.events().begin(), d.events().end()}, x);
  };
  const auto tr = widen(train, 1), te = widen(test, 2);
  const auto model = fit_learner(spec_with(LearnerKind::random_survival_forest, {{"ntree", 200}, {"mtry", 2}}), tr, 7);
  const auto risk = as_vector(model->predict_risk(te.covariates(), 7.0));
  const auto w = ipcw_weights(fit_censoring_km(te), te, 7.0);
  CHECK(ipcw_auc(risk, w) > 0.75);
}

TEST_CASE("forest growth does not depend on the worker count") {
  const auto data = oracle::weibull_ph(300, {0.8, -0.5, 0.3}, 1.2, 5.0, 0.1, 66);
  ForestParameters params;
  params.ntree = 16;
  params.mtry = 2;
  const auto serial = grow_forest(data, params, 5, Execution::serial());
  const auto parallel = grow_forest(data, params, 5, Execution{4});
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t b = 0; b < serial.size(); ++b) CHECK(serial[b].to_json() == parallel[b].to_json());
}

TEST_CASE("mtry larger than the covariate count is rejected") {
  const auto data = oracle::weibull_ph(100, {0.8, -0.5}, 1.2, 5.0, 0.1, 67);
  CHECK_THROWS_AS(fit_learner(spec_with(LearnerKind::random_survival_forest, {{"mtry", 3}}), data, 1), InputError);
}

// ---------------------------------------------------------------------------
// Neural network

TEST_CASE("zero output layer without training gives the Breslow baseline for everyone") {
  const auto data = oracle::weibull_ph(200, {0.8, -0.5}, 1.2, 5.0, 0.1, 71);
  const auto spec = spec_with(LearnerKind::survival_neural_network, {{"epochs", 0}, {"init_output_zero", 1}});
  const auto model = fit_learner(spec, data, 3);
  std::vector<double> t(data.times().begin(), data.times().end());
  std::vector<int> e(data.events().begin(), data.events().end());
  const std::vector<double> ones(t.size(), 1.0);
  for (double s : {0.5, 2.0, 6.0}) {
    const Eigen::VectorXd pred = model->predict_survival(data.covariates(), s);
    const double expected = std::exp(-naive_nelson_aalen(t, e, ones, s));
    CHECK((pred.array() - expected).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("network gradient matches finite differences") {
  const auto data = oracle::weibull_ph(60, {0.8, -0.5, 0.2}, 1.2, 5.0, 0.1, 72);
  std::mt19937_64 gen(5);
  std::normal_distribution<double> z(0, 0.5);
  NetworkWeights w;
  w.w1 = Eigen::MatrixXd(4, 3);
  w.b1 = Eigen::VectorXd(4);
  w.w2 = Eigen::VectorXd(4);
  for (Eigen::Index i = 0; i < w.w1.size(); ++i) w.w1.data()[i] = z(gen);
  for (Eigen::Index i = 0; i < 4; ++i) {
    w.b1[i] = z(gen);
    w.w2[i] = z(gen);
  }
  const auto loss = network_loss_and_gradient(w, data.covariates(), data.times(), data.events(), 0.3);
  const Eigen::VectorXd flat = w.flatten();
  const Eigen::VectorXd analytic = loss.gradient.flatten();
  for (Eigen::Index k = 0; k < flat.size(); ++k) {
    const double h = 1e-6;
    Eigen::VectorXd up = flat, down = flat;
    up[k] += h;
    down[k] -= h;
    const double fd =
        (network_loss_and_gradient(NetworkWeights::unflatten(up, 4, 3), data.covariates(), data.times(), data.events(), 0.3).value -
         network_loss_and_gradient(NetworkWeights::unflatten(down, 4, 3), data.covariates(), data.times(), data.events(), 0.3).value) /
        (2 * h);
    CHECK(std::abs(analytic[k] - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("network ranking agrees with Cox on linear-hazard data") {
  const auto data = oracle::weibull_ph(2000, {0.8, -0.6, 0.4}, 1.2, 5.0, 0.08, 73);
  const auto cox = fit_learner(LearnerSpec::defaults(LearnerKind::cox_main_terms), data, 1);
  const auto nn = fit_learner(spec_with(LearnerKind::survival_neural_network, {{"epochs", 50}}), data, 1);
  const Eigen::MatrixXd x = data.covariates().topRows(500);
  CHECK(oracle::kendall_tau(as_vector(cox->predict_risk(x, 5.0)), as_vector(nn->predict_risk(x, 5.0))) > 0.8);
}

TEST_CASE("overwhelming decay flattens the network") {
  const auto data = oracle::weibull_ph(1000, {0.8, -0.6, 0.4}, 1.2, 5.0, 0.08, 74);
  const auto nn = fit_learner(spec_with(LearnerKind::survival_neural_network, {{"decay", 1e6}, {"epochs", 5}}), data, 1);
  const Eigen::VectorXd r = nn->predict_risk(data.covariates(), 5.0);
  CHECK(std::sqrt((r.array() - r.mean()).square().mean()) < 0.01);
}

// ---------------------------------------------------------------------------
// Specs and tuning

TEST_CASE("spec validation fills defaults and rejects bad values") {
  const auto s = LearnerSpec{LearnerKind::random_survival_forest, {{"ntree", 10}}, {}}.validated();
  CHECK(s.get("nodesize") == 20);
  CHECK(s.get("mtry") == 3);
  CHECK_THROWS_AS((LearnerSpec{LearnerKind::random_survival_forest, {{"depth", 3}}, {}}.validated()), InputError);
  CHECK_THROWS_AS((LearnerSpec{LearnerKind::elasticnet_cox, {{"alpha", 1.5}}, {}}.validated()), InputError);
  CHECK_THROWS_AS((LearnerSpec{LearnerKind::royston_parmar, {{"k", 2.5}}, {}}.validated()), InputError);
  CHECK_THROWS_AS(learner_kind_from_string("svm"), InputError);
  CHECK(learner_kind_from_string("rsf") == LearnerKind::random_survival_forest);
  const auto back = LearnerSpec::from_json(s.to_json());
  CHECK(back.hyperparameters == s.hyperparameters);
}

TEST_CASE("tuning a singleton grid returns it unchanged") {
  const auto data = oracle::weibull_ph(200, {0.8, -0.5}, 1.2, 5.0, 0.1, 81);
  LearnerSpec spec = LearnerSpec::defaults(LearnerKind::elasticnet_cox);
  spec.tuning_grid["lambda"] = {0.05};
  const auto result = tune_hyperparameters(spec, data, LossKind::ipcw_brier, 5.0, 5, 1);
  CHECK(result.selected.get("lambda") == 0.05);
  CHECK(result.selected.tuning_grid.empty());

  spec.tuning_grid["lambda"] = {0.05, 0.05, 0.05};
  const auto dup = tune_hyperparameters(spec, data, LossKind::ipcw_brier, 5.0, 5, 1);
  CHECK(dup.selected.hyperparameters == result.selected.hyperparameters);
  CHECK(dup.grid.size() == result.grid.size());
}

TEST_CASE("tuning picks the unpenalized elastic net on signal data") {
  const auto data = oracle::weibull_ph(600, {0.9, -0.7, 0.5}, 1.2, 5.0, 0.08, 82);
  LearnerSpec spec = LearnerSpec::defaults(LearnerKind::elasticnet_cox);
  spec.tuning_grid["lambda"] = {0.0, 1e3};
  const auto result = tune_hyperparameters(spec, data, LossKind::ipcw_brier, 5.0, 5, 2);
  CHECK(result.selected.get("lambda") == 0.0);
  // Grid points are ordered most regularized first.
  CHECK(tuning_grid_points(spec).front().at("lambda") == 1e3);
  REQUIRE(result.grid.size() == 2);
  CHECK(result.grid[1].loss < result.grid[0].loss);
}
