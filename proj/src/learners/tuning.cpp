#include "survsl/learners/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "survsl/error.hpp"
#include "survsl/random.hpp"

namespace survsl {

namespace {

// (name, descending) priority used to order grid points per kind.
std::vector<std::pair<std::string, bool>> regularization_order(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::elasticnet_cox: return {{"lambda", true}, {"alpha", true}};
    case LearnerKind::random_survival_forest: return {{"nodesize", true}, {"mtry", false}};
    case LearnerKind::survival_neural_network: return {{"decay", true}, {"n_nodes", false}};
    case LearnerKind::royston_parmar: return {{"k", false}};
    default: return {};
  }
}

}  // namespace

std::vector<Hyperparameters> tuning_grid_points(const LearnerSpec& raw) {
  const LearnerSpec spec = raw.validated();
  std::vector<Hyperparameters> points{spec.hyperparameters};
  for (const auto& [name, values] : spec.tuning_grid) {
    std::vector<Hyperparameters> next;
    for (const auto& point : points) {
      for (double v : values) {
        Hyperparameters h = point;
        h[name] = v;
        next.push_back(std::move(h));
      }
    }
    points = std::move(next);
  }
  const auto priority = regularization_order(spec.kind);
  auto less = [&](const Hyperparameters& a, const Hyperparameters& b) {
    for (const auto& [name, descending] : priority) {
      const double x = a.at(name), y = b.at(name);
      if (x != y) return descending ? x > y : x < y;
    }
    return a < b;
  };
  std::stable_sort(points.begin(), points.end(), less);
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return points;
}

TuningResult tune_hyperparameters(const LearnerSpec& spec, const SurvivalDataset& data,
                                  LossKind loss, double tau, int k_inner, std::uint64_t seed,
                                  const IpcwOptions& ipcw, const Execution& exec) {
  if (spec.tuning_grid.empty()) {
    throw InputError("empty_tuning_grid", "tune_hyperparameters needs a nonempty tuning grid");
  }
  const auto points = tuning_grid_points(spec);
  TuningResult result;
  result.selected.kind = spec.kind;
  if (points.size() == 1) {
    result.selected.hyperparameters = points.front();
    result.grid.push_back({points.front(), std::numeric_limits<double>::quiet_NaN(), 0, false});
    return result;
  }
  if (k_inner < 2) throw InputError("invalid_folds", "inner cross-validation needs at least 2 folds");

  const auto folds = split_folds(data, k_inner, derive_seed(seed, 0x7475u));
  const auto weights = ipcw_weights(fit_censoring_km(data), data, tau, ipcw);
  const auto n = data.size();
  const auto kf = static_cast<std::size_t>(k_inner);

  // risk[g][i]: out-of-fold risk of grid point g for subject i (NaN when the
  // fold fit failed).
  std::vector<std::vector<double>> risk(points.size(),
                                        std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
  std::vector<std::vector<char>> failed(points.size(), std::vector<char>(kf, 0));
  parallel_for(points.size() * kf, exec, [&](std::size_t item) {
    const auto g = item / kf;
    const int f = static_cast<int>(item % kf);
    const auto train = fold_complement(folds, f);
    const auto test = fold_members(folds, f);
    LearnerSpec point{spec.kind, points[g], {}};
    try {
      const auto model = fit_learner(point, data.subset(train), derive_seed(seed, 1, static_cast<std::uint64_t>(f)));
      const Eigen::VectorXd r = model->predict_risk(data.subset(test).covariates(), tau);
      for (std::size_t k = 0; k < test.size(); ++k) risk[g][test[k]] = r[static_cast<Eigen::Index>(k)];
    } catch (const Error&) {
      failed[g][static_cast<std::size_t>(f)] = 1;
    }
  });

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_index = points.size();
  for (std::size_t g = 0; g < points.size(); ++g) {
    GridPointResult entry{points[g], std::numeric_limits<double>::quiet_NaN(), 0, false};
    entry.failed_folds = static_cast<int>(std::count(failed[g].begin(), failed[g].end(), 1));
    if (2 * entry.failed_folds > k_inner) {
      entry.disqualified = true;
    } else {
      std::vector<std::size_t> rows;
      std::vector<double> values;
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isnan(risk[g][i])) {
          rows.push_back(i);
          values.push_back(risk[g][i]);
        }
      }
      try {
        entry.loss = evaluate_loss(loss, values, weights.subset(rows));
      } catch (const Error&) {
        entry.disqualified = true;
      }
      if (!entry.disqualified && std::isfinite(entry.loss) &&
          (best_index == points.size() || entry.loss < best - 1e-12 * std::max(1.0, std::abs(best)))) {
        best = entry.loss;
        best_index = g;
      }
    }
    result.grid.push_back(std::move(entry));
  }
  if (best_index == points.size()) {
    throw NumericalError("tuning_failed",
                         "every grid point of " + spec.label() + " was disqualified",
                         {{"grid_size", points.size()}});
  }
  result.selected.hyperparameters = points[best_index];
  return result;
}

}  // namespace survsl
