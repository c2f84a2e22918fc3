#include <cmath>
#include <limits>

#include "doctest.h"
#include "oracles.hpp"
#include "survsl/bootstrap.hpp"
#include "survsl/error.hpp"

using namespace survsl;

namespace {

double mean_time(const SurvivalDataset& cohort, std::span<const double>) {
  double s = 0;
  for (std::size_t i = 0; i < cohort.size(); ++i) s += cohort.time(i);
  return s / static_cast<double>(cohort.size());
}

std::vector<double> no_risk(const SurvivalDataset&, const SurvivalDataset& eval) {
  return std::vector<double>(eval.size(), 0.0);
}

// Type-7 quantile written out from its definition.
double type7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (v.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  return v[lo] + (h - lo) * (v[std::min(lo + 1, v.size() - 1)] - v[lo]);
}

}  // namespace

TEST_CASE("a single replicate gives a degenerate interval") {
  const auto data = oracle::make_dataset({1, 2, 3, 4, 5}, {1, 0, 1, 0, 1});
  BootstrapConfig config;
  config.iterations = 1;
  const auto est = bootstrap_ci(mean_time, data, no_risk, config);
  CHECK(est.lower == est.upper);
  CHECK(est.point == 3.0);
}

TEST_CASE("identical subjects give a zero-width interval") {
  const auto data = oracle::make_dataset(std::vector<double>(30, 2.5), std::vector<int>(30, 1));
  BootstrapConfig config;
  config.iterations = 50;
  const auto est = bootstrap_ci(mean_time, data, no_risk, config);
  CHECK(est.lower == 2.5);
  CHECK(est.upper == 2.5);
}

TEST_CASE("replicates do not depend on the worker count") {
  std::vector<double> t;
  for (int i = 0; i < 80; ++i) t.push_back(1 + (i * 37 % 80) * 0.1);
  const auto data = oracle::make_dataset(t, std::vector<int>(80, 1));
  BootstrapConfig serial;
  serial.iterations = 64;
  serial.seed = 5;
  BootstrapConfig parallel = serial;
  parallel.exec.workers = 4;
  const ReplicateFn fn = [&](std::span<const std::size_t> rows, std::size_t) {
    return std::vector<double>{mean_time(data.subset(rows), {}), static_cast<double>(rows[0])};
  };
  CHECK(bootstrap_replicates(80, 2, fn, serial) == bootstrap_replicates(80, 2, fn, parallel));
  CHECK(bootstrap_rows(80, 5, 3) == bootstrap_rows(80, 5, 3));
  CHECK(bootstrap_rows(80, 5, 3) != bootstrap_rows(80, 5, 4));
}

TEST_CASE("percentile interval uses type-7 quantiles and skips NaN") {
  std::vector<double> v;
  for (int i = 0; i < 57; ++i) v.push_back(std::sin(i * 1.3) * 10);
  auto with_nan = v;
  with_nan.push_back(std::numeric_limits<double>::quiet_NaN());
  const auto iv = percentile_interval(with_nan);
  CHECK(iv.lower == doctest::Approx(type7(v, 0.025)).epsilon(1e-14));
  CHECK(iv.upper == doctest::Approx(type7(v, 0.975)).epsilon(1e-14));
  CHECK(iv.defined == 57);
  CHECK(iv.undefined == 1);
}

TEST_CASE("too many undefined replicates is an error") {
  const auto data = oracle::make_dataset({1, 2, 3, 4, 5, 6, 7, 8}, {1, 1, 1, 1, 0, 0, 0, 0});
  BootstrapConfig config;
  config.iterations = 100;
  config.seed = 3;
  // Undefined whenever the resample misses subject 0 (about 34% of replicates).
  const Metric picky = [](const SurvivalDataset& cohort, std::span<const double>) {
    for (std::size_t i = 0; i < cohort.size(); ++i)
      if (cohort.time(i) == 1.0) return 1.0;
    throw InputError("undefined", "subject 0 absent");
  };
  try {
    bootstrap_ci(picky, data, no_risk, config);
    FAIL("expected bootstrap_undefined");
  } catch (const NumericalError& e) {
    CHECK(e.code() == "bootstrap_undefined");
  }
  config.max_undefined_fraction = 0.6;
  const auto est = bootstrap_ci(picky, data, no_risk, config);
  CHECK(est.undefined > 10);
  CHECK(est.lower == 1.0);
}

TEST_CASE("refit scheme evaluates on the original cohort") {
  const auto data = oracle::make_dataset({1, 2, 3, 4, 5}, {1, 1, 1, 1, 1});
  BootstrapConfig config;
  config.iterations = 20;
  // Risk is the training mean time; metric is its value on the evaluation cohort.
  const RiskProducer producer = [](const SurvivalDataset& train, const SurvivalDataset& eval) {
    return std::vector<double>(eval.size(), mean_time(train, {}));
  };
  const Metric metric = [](const SurvivalDataset& eval, std::span<const double> risk) {
    CHECK(eval.size() == 5);
    return risk[0];
  };
  const auto est = bootstrap_ci(metric, data, producer, config, BootstrapScheme::refit_evaluate_original);
  CHECK(est.point == 3.0);
  CHECK(est.lower >= 1.0);
  CHECK(est.upper <= 5.0);
}
