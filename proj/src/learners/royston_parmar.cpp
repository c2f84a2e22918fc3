#include "survsl/learners/royston_parmar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "survsl/error.hpp"
#include "survsl/learners/aft.hpp"
#include "survsl/numeric.hpp"
#include "survsl/optim.hpp"
#include "survsl/random.hpp"

namespace survsl {

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

RoystonParmarModel::RoystonParmarModel(Hyperparameters hyperparameters, TrainingInfo training,
                                       std::vector<std::string> feature_names,
                                       RestrictedCubicSpline spline,
                                       Eigen::VectorXd spline_coefficients,
                                       Eigen::VectorXd coefficients, Eigen::VectorXd means,
                                       int restarts, double loglik)
    : FittedLearner(LearnerKind::royston_parmar, std::move(hyperparameters), training,
                    std::move(feature_names)),
      spline_(std::move(spline)),
      gamma_(std::move(spline_coefficients)),
      beta_(std::move(coefficients)),
      means_(std::move(means)),
      restarts_(restarts),
      loglik_(loglik) {}

double RoystonParmarModel::log_baseline_cumhaz(double t) const {
  const double u = std::log(std::max(t, kMinParametricTime));
  return gamma_[0] + spline_.basis(u).dot(gamma_.tail(gamma_.size() - 1));
}

Eigen::VectorXd RoystonParmarModel::survival_at(const Eigen::MatrixXd& covariates, double t) const {
  const double base = log_baseline_cumhaz(t);
  const Eigen::VectorXd eta = ((covariates.rowwise() - means_.transpose()) * beta_).array() + base;
  return (-eta.array().exp()).exp().matrix();
}

nlohmann::json RoystonParmarModel::parameters_json() const {
  return {{"knots", spline_.knots()},
          {"spline_coefficients", to_std(gamma_)},
          {"coefficients", to_std(beta_)},
          {"means", to_std(means_)},
          {"restarts", restarts_},
          {"loglik", loglik_}};
}

std::shared_ptr<const RoystonParmarModel> RoystonParmarModel::from_parameters(
    Hyperparameters hyperparameters, TrainingInfo training, std::vector<std::string> feature_names,
    const nlohmann::json& parameters) {
  return std::make_shared<const RoystonParmarModel>(
      std::move(hyperparameters), training, std::move(feature_names),
      RestrictedCubicSpline(parameters.at("knots").get<std::vector<double>>()),
      to_eigen(parameters.at("spline_coefficients").get<std::vector<double>>()),
      to_eigen(parameters.at("coefficients").get<std::vector<double>>()),
      to_eigen(parameters.at("means").get<std::vector<double>>()),
      parameters.value("restarts", 0), parameters.value("loglik", 0.0));
}

// ---------------------------------------------------------------------------

std::shared_ptr<const RoystonParmarModel> fit_royston_parmar(const SurvivalDataset& data,
                                                             const LearnerSpec& raw,
                                                             const RoystonParmarOptions& options) {
  require_fittable(data, "royston_parmar");
  const LearnerSpec spec = raw.validated();
  const int k = static_cast<int>(spec.get("k"));
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto p = data.covariates().cols();
  const double nd = static_cast<double>(n);

  std::vector<double> log_event_times;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.event(i)) log_event_times.push_back(std::log(std::max(data.time(i), kMinParametricTime)));
  }
  std::sort(log_event_times.begin(), log_event_times.end());
  std::vector<double> unique_times = log_event_times;
  unique_times.erase(std::unique(unique_times.begin(), unique_times.end()), unique_times.end());
  if (static_cast<int>(unique_times.size()) < k + 2) {
    throw InputError("too_few_event_times",
                     "Royston-Parmar with " + std::to_string(k) + " interior knots needs at least " +
                         std::to_string(k + 2) + " distinct event times, got " +
                         std::to_string(unique_times.size()),
                     {{"k", k}, {"distinct_event_times", unique_times.size()}});
  }
  std::vector<double> knots{log_event_times.front()};
  for (int j = 1; j <= k; ++j) {
    knots.push_back(quantile_sorted(log_event_times, static_cast<double>(j) / (k + 1)));
  }
  knots.push_back(log_event_times.back());
  for (std::size_t j = 1; j < knots.size(); ++j) {
    if (!(knots[j] > knots[j - 1])) {
      throw InputError("too_few_event_times",
                       "event times are too concentrated to place " + std::to_string(k) +
                           " distinct interior knots",
                       {{"k", k}, {"knots", knots}});
    }
  }
  const RestrictedCubicSpline spline(knots);
  const int m = spline.num_basis();  // spline weights besides the intercept

  const Eigen::VectorXd means = data.covariates().colwise().mean();
  Eigen::MatrixXd xs = data.covariates().rowwise() - means.transpose();
  Eigen::VectorXd sd(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    sd[j] = std::sqrt(xs.col(j).squaredNorm() / nd);
    if (sd[j] > 0.0) {
      xs.col(j) /= sd[j];
    } else {
      xs.col(j).setZero();
    }
  }
  Eigen::MatrixXd basis(n, m + 1), slope(n, m + 1);
  Eigen::VectorXd delta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = std::log(std::max(data.time(static_cast<std::size_t>(i)), kMinParametricTime));
    basis(i, 0) = 1.0;
    basis.row(i).tail(m) = spline.basis(u).transpose();
    slope(i, 0) = 0.0;
    slope.row(i).tail(m) = spline.derivative(u).transpose();
    delta[i] = data.event(static_cast<std::size_t>(i)) ? 1.0 : 0.0;
  }
  const Eigen::Index dim = m + 1 + p;

  // Negative mean log-likelihood without the constant sum(delta log t):
  //   event:    log s'(u) + eta - exp(eta)
  //   censored: -exp(eta)
  const Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    const Eigen::VectorXd gamma = theta.head(m + 1);
    const Eigen::VectorXd eta = basis * gamma + xs * theta.tail(p);
    const Eigen::VectorXd ds = slope * gamma;
    grad.setZero(dim);
    double value = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = std::exp(eta[i]);
      if (!std::isfinite(h)) return std::numeric_limits<double>::infinity();
      double weight = -h;
      if (delta[i] == 1.0) {
        if (!(ds[i] > 0.0)) return std::numeric_limits<double>::infinity();
        value += std::log(ds[i]) + eta[i];
        weight += 1.0;
        grad.head(m + 1).noalias() += slope.row(i).transpose() / ds[i];
      }
      value -= h;
      grad.head(m + 1).noalias() += weight * basis.row(i).transpose();
      grad.tail(p).noalias() += weight * xs.row(i).transpose();
    }
    grad /= -nd;
    return -value / nd;
  };

  auto monotone = [&](const Eigen::VectorXd& gamma) {
    if (!(gamma[1] > 0.0)) return false;  // slope left of the first knot
    const double lo = knots.front(), hi = knots.back();
    for (int g = 0; g <= options.monotonicity_grid; ++g) {
      const double u = lo + (hi - lo) * g / options.monotonicity_grid;
      if (!(spline.derivative(u).dot(gamma.tail(m)) > 0.0)) return false;
    }
    return true;
  };

  // Start at the exponential model: log H = log(rate) + log t.
  Eigen::VectorXd start = Eigen::VectorXd::Zero(dim);
  double total_time = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) total_time += std::max(data.time(i), kMinParametricTime);
  start[0] = std::log(delta.sum() / total_time);
  start[1] = 1.0;

  BfgsOptions bfgs;
  bfgs.gradient_tolerance = options.gradient_tolerance;
  bfgs.max_iterations = options.max_iterations;
  Rng rng(derive_seed(0x5250u, static_cast<std::uint64_t>(k)));
  nlohmann::json attempts = nlohmann::json::array();
  for (int restart = 0; restart <= options.max_restarts; ++restart) {
    Eigen::VectorXd x0 = start;
    if (restart > 0) {
      for (Eigen::Index j = 2; j < dim; ++j) x0[j] += 0.1 * rng.normal();
      x0[1] *= std::exp(0.2 * rng.normal());
    }
    Eigen::VectorXd scratch;
    if (!std::isfinite(objective(x0, scratch))) {
      attempts.push_back({{"restart", restart}, {"message", "infeasible start"}});
      continue;
    }
    const MinimizeResult result = minimize_bfgs(objective, x0, bfgs);
    const bool ok_gradient = result.converged || result.gradient_norm < 1e3 * options.gradient_tolerance;
    const bool ok_shape = ok_gradient && monotone(result.x.head(m + 1));
    attempts.push_back({{"restart", restart},
                        {"message", result.message},
                        {"gradient_norm", result.gradient_norm},
                        {"monotone", ok_shape}});
    if (!ok_gradient || !ok_shape) continue;

    Eigen::VectorXd beta(p);
    for (Eigen::Index j = 0; j < p; ++j) beta[j] = sd[j] > 0.0 ? result.x[m + 1 + j] / sd[j] : 0.0;
    double log_t_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (delta[i] == 1.0) log_t_sum += std::log(std::max(data.time(static_cast<std::size_t>(i)), kMinParametricTime));
    }
    TrainingInfo info{data.size(), data.num_covariates(), data.event_count(), 0};
    return std::make_shared<const RoystonParmarModel>(
        spec.hyperparameters, info, data.covariate_names(), spline, result.x.head(m + 1), beta,
        means, restart, -result.value * nd - log_t_sum);
  }
  throw NumericalError("nonmonotone_fit",
                       "Royston-Parmar fit did not yield an increasing cumulative hazard after " +
                           std::to_string(options.max_restarts) + " restarts",
                       {{"attempts", attempts}});
}

}  // namespace survsl
