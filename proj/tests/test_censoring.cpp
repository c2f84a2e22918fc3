#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "survsl/censoring.hpp"
#include "survsl/error.hpp"
#include "survsl/step_function.hpp"

using namespace survsl;

TEST_CASE("no censoring gives G = 1 up to the last time") {
  const auto data = oracle::make_dataset({1, 2, 3, 4}, {1, 1, 1, 1});
  const auto g = fit_censoring_km(data);
  for (double t : {0.0, 0.5, 1.0, 2.5, 4.0}) CHECK(g.at(t) == 1.0);
}

TEST_CASE("two censored subjects") {
  const auto g = fit_censoring_km(oracle::make_dataset({1, 2}, {0, 0}));
  CHECK(g.at(0.5) == 1.0);
  CHECK(g.at(1.0) == 0.5);
  CHECK(g.at(1.5) == 0.5);
  CHECK(g.at(2.0) == 0.0);
  CHECK(g.left_limit(1.0) == 1.0);
  CHECK(g.left_limit(2.0) == 0.5);
}

TEST_CASE("event leaves the risk set before a censoring") {
  const auto g = fit_censoring_km(oracle::make_dataset({1, 2, 3}, {1, 0, 1}));
  CHECK(g.at(1.999) == 1.0);
  CHECK(g.at(2.0) == 0.5);
  CHECK(g.at(3.5) == 0.5);
}

TEST_CASE("tied event and censoring use the event-first convention") {
  // At t = 2 one event and one censoring: the event leaves first, so the
  // censoring risk set at 2 is {censored at 2, 3}, G(2) = 1/2.
  const auto g = fit_censoring_km(oracle::make_dataset({1, 2, 2, 3}, {1, 1, 0, 1}));
  CHECK(g.at(2.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("censoring KM equals event KM with the indicators swapped") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<double> t;
  std::vector<int> e, swapped;
  for (int i = 0; i < 40; ++i) {
    t.push_back(std::round(u(gen) * 4) / 4 + 0.25);  // ties included
    e.push_back(u(gen) < 5 ? 1 : 0);
    swapped.push_back(1 - e.back());
  }
  const auto g = fit_censoring_km(oracle::make_dataset(t, e));
  const oracle::NaiveCensoringKm naive{t, e};
  for (double s = 0.0; s < 11.0; s += 0.125) CHECK(g.at(s) == doctest::Approx(naive.at(s)).epsilon(1e-12));
  // Without ties, the plain product limit with swapped indicators gives G.
  std::vector<double> distinct;
  for (int i = 0; i < 40; ++i) distinct.push_back(i + 1.0 + 0.1 * (i % 3));
  const auto g2 = fit_censoring_km(oracle::make_dataset(distinct, e));
  const auto km = kaplan_meier(distinct, swapped);
  for (double s = 0.0; s < 45.0; s += 0.5) CHECK(g2.at(s) == doctest::Approx(km(s)).epsilon(1e-14));
}

TEST_CASE("IPCW weights") {
  SUBCASE("no censoring gives unit weights") {
    const auto data = oracle::make_dataset({1, 3, 8, 9}, {1, 1, 1, 1});
    const auto w = ipcw_weights(fit_censoring_km(data), data, 7.0);
    for (double v : w.weights) CHECK(v == 1.0);
  }
  SUBCASE("censored before tau gets weight 0") {
    const auto data = oracle::make_dataset({1, 3, 8, 9}, {1, 0, 1, 1});
    const auto w = ipcw_weights(fit_censoring_km(data), data, 7.0);
    CHECK(w.weights[1] == 0.0);
    CHECK(w.status[1] == HorizonStatus::censored);
  }
  SUBCASE("four-subject cohort by hand") {
    // Censoring KM: G = 1 before 2, G(2) = 1 - 1/3 = 2/3, G(4) = 0.
    const auto data = oracle::make_dataset({1, 2, 3, 4}, {1, 0, 1, 0});
    const auto w = ipcw_weights(fit_censoring_km(data), data, 2.5);
    CHECK(w.weights[0] == doctest::Approx(1.0).epsilon(1e-15));        // event at 1: 1 / G(1-)
    CHECK(w.weights[1] == 0.0);                                         // censored at 2 < tau
    CHECK(w.weights[2] == doctest::Approx(1.5).epsilon(1e-15));        // control: 1 / G(2.5-)
    CHECK(w.weights[3] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(w.outcome(0) == 1.0);
    CHECK(w.outcome(2) == 0.0);
  }
  SUBCASE("floor bounds the weights and is reported") {
    const auto data = oracle::make_dataset({1, 2, 3, 4, 10}, {0, 0, 0, 0, 1});
    IpcwOptions opt;
    opt.floor = 0.4;
    const auto w = ipcw_weights(fit_censoring_km(data), data, 9.0, opt);
    // G(9-) = 4/5 * 3/4 * 2/3 * 1/2 = 0.2, floored to 0.4.
    CHECK(w.weights[4] == doctest::Approx(2.5));
    CHECK(w.floored_count == 1);
  }
  SUBCASE("agrees with the naive computation on random cohorts") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0, 1);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> t;
      std::vector<int> e;
      for (int i = 0; i < 60; ++i) {
        t.push_back(std::ceil(u(gen) * 40) / 4);
        e.push_back(u(gen) < 0.5);
      }
      const auto data = oracle::make_dataset(t, e);
      const auto w = ipcw_weights(fit_censoring_km(data), data, 5.0);
      const auto naive = oracle::naive_ipcw(t, e, 5.0);
      for (int i = 0; i < 60; ++i) CHECK(w.weights[i] == doctest::Approx(naive.w[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("censoring model JSON round trip") {
  const auto data = oracle::make_dataset({1, 2, 3, 4}, {1, 0, 1, 0});
  const auto g = fit_censoring_km(data);
  const auto back = CensoringModel::from_json(g.to_json());
  for (double t : {0.5, 2.0, 3.0, 4.0}) CHECK(back.at(t) == g.at(t));
  CHECK(back.max_time() == g.max_time());
}
