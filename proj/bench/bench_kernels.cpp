// Serial reference paths (workers = 1) against the OpenMP kernels.

#include <benchmark/benchmark.h>

#include "survsl/bootstrap.hpp"
#include "survsl/censoring.hpp"
#include "survsl/dataset.hpp"
#include "survsl/metrics.hpp"
#include "survsl/superlearner.hpp"

using namespace survsl;

namespace {

const SimulatedCohort& cohort() {
  static const SimulatedCohort c = generate_cohort(2000, Era::development, DriftSpec{{}, 1.0, 1.0, 1},
                                                   GeneratorModel::kidney_transplant());
  return c;
}

Execution exec_for(const benchmark::State& state) { return Execution{static_cast<int>(state.range(0))}; }

void workers_args(benchmark::internal::Benchmark* b) {
  b->Arg(1)->Arg(2);
  const int hw = available_workers();
  if (hw > 2) b->Arg(hw);
  b->Unit(benchmark::kMillisecond);
}

void forest_fit(benchmark::State& state) {
  LearnerSpec spec = LearnerSpec::defaults(LearnerKind::random_survival_forest);
  spec.hyperparameters["ntree"] = 100;
  for (auto _ : state) benchmark::DoNotOptimize(fit_learner(spec, cohort().data, 7, exec_for(state)));
}
BENCHMARK(forest_fit)->Apply(workers_args);

void bootstrap_tauroc(benchmark::State& state) {
  BootstrapConfig config;
  config.iterations = 200;
  config.seed = 3;
  config.exec = exec_for(state);
  const auto& c = cohort();
  const Metric metric = [](const SurvivalDataset& data, std::span<const double> risk) {
    return tauroc(risk, data, 7.0, fit_censoring_km(data));
  };
  const RiskProducer producer = [&](const SurvivalDataset&, const SurvivalDataset&) { return c.true_risk; };
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_ci(metric, c.data, producer, config));
}
BENCHMARK(bootstrap_tauroc)->Apply(workers_args);

void cross_validation(benchmark::State& state) {
  const std::vector<LearnerSpec> pool{LearnerSpec::defaults(LearnerKind::cox_main_terms),
                                      LearnerSpec::defaults(LearnerKind::weibull_aft),
                                      LearnerSpec::defaults(LearnerKind::royston_parmar)};
  const auto folds = split_folds(cohort().data, 10, 1);
  CvOptions options;
  options.exec = exec_for(state);
  for (auto _ : state) benchmark::DoNotOptimize(cv_predictions(pool, cohort().data, folds, 7.0, options));
}
BENCHMARK(cross_validation)->Apply(workers_args);

}  // namespace

BENCHMARK_MAIN();
