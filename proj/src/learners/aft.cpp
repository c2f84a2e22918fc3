#include "survsl/learners/aft.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "survsl/error.hpp"
#include "survsl/optim.hpp"

namespace survsl {

namespace {

using quiet_policy = boost::math::policies::policy<
    boost::math::policies::domain_error<boost::math::policies::ignore_error>,
    boost::math::policies::overflow_error<boost::math::policies::ignore_error>,
    boost::math::policies::underflow_error<boost::math::policies::ignore_error>,
    boost::math::policies::evaluation_error<boost::math::policies::ignore_error>>;

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Standardized design with a leading intercept column.
struct AftDesign {
  Eigen::MatrixXd c;  // n x (p + 1)
  Eigen::VectorXd means;
  Eigen::VectorXd sd;
  Eigen::VectorXd log_time;
  Eigen::VectorXd time;
  Eigen::VectorXd delta;
};

AftDesign make_design(const SurvivalDataset& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto p = data.covariates().cols();
  AftDesign d;
  d.means = data.covariates().colwise().mean();
  d.c.resize(n, p + 1);
  d.c.col(0).setOnes();
  d.sd.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::VectorXd col = data.covariates().col(j).array() - d.means[j];
    d.sd[j] = std::sqrt(col.squaredNorm() / static_cast<double>(n));
    d.c.col(j + 1) = d.sd[j] > 0.0 ? Eigen::VectorXd(col / d.sd[j]) : Eigen::VectorXd::Zero(n);
  }
  d.time.resize(n);
  d.log_time.resize(n);
  d.delta.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.time[i] = std::max(data.time(static_cast<std::size_t>(i)), kMinParametricTime);
    d.log_time[i] = std::log(d.time[i]);
    d.delta[i] = data.event(static_cast<std::size_t>(i)) ? 1.0 : 0.0;
  }
  return d;
}

Eigen::VectorXd unstandardize(const Eigen::VectorXd& beta_std, const Eigen::VectorXd& sd) {
  Eigen::VectorXd out(sd.size());
  for (Eigen::Index j = 0; j < sd.size(); ++j) out[j] = sd[j] > 0.0 ? beta_std[j + 1] / sd[j] : 0.0;
  return out;
}

// Mean Weibull log-likelihood in theta = (location coefficients, log sigma),
// without the constant -sum(delta log t).
double weibull_loglik(const AftDesign& d, const Eigen::VectorXd& theta, Eigen::VectorXd* grad,
                      Eigen::MatrixXd* hess) {
  const auto q = d.c.cols();
  const double s = theta[q];
  const double sigma = std::exp(s);
  const Eigen::VectorXd loc = d.c * theta.head(q);
  const double nd = static_cast<double>(d.c.rows());
  double value = 0.0;
  if (grad) grad->setZero(q + 1);
  if (hess) hess->setZero(q + 1, q + 1);
  for (Eigen::Index i = 0; i < d.c.rows(); ++i) {
    const double z = (d.log_time[i] - loc[i]) / sigma;
    const double ez = std::exp(z);
    const double delta = d.delta[i];
    value += delta * (z - s) - ez;
    if (!grad) continue;
    const double a = delta - ez;
    grad->head(q).noalias() += (-a / sigma) * d.c.row(i).transpose();
    (*grad)[q] += -delta - z * a;
    if (!hess) continue;
    hess->topLeftCorner(q, q).noalias() -= (ez / (sigma * sigma)) * d.c.row(i).transpose() * d.c.row(i);
    const Eigen::VectorXd cross = (-(z * ez - a) / sigma) * d.c.row(i).transpose();
    hess->col(q).head(q) += cross;
    hess->row(q).head(q) += cross.transpose();
    (*hess)(q, q) += z * a - z * z * ez;
  }
  if (grad) *grad /= nd;
  if (hess) *hess /= nd;
  return value / nd;
}

}  // namespace

double log_gamma_q(double a, double x) {
  const double q = boost::math::gamma_q(a, x, quiet_policy());
  if (q > 1e-280 && std::isfinite(q)) return std::log(q);
  // Q(a, x) ~ x^(a-1) e^-x / Gamma(a) * (1 + (a-1)/x + (a-1)(a-2)/x^2) for large x.
  const double series = 1.0 + (a - 1.0) / x + (a - 1.0) * (a - 2.0) / (x * x);
  return (a - 1.0) * std::log(x) - x - std::lgamma(a) + std::log(std::max(series, 1e-300));
}

AftModel::AftModel(LearnerKind kind, Hyperparameters hyperparameters, TrainingInfo training,
                   std::vector<std::string> feature_names, double intercept,
                   Eigen::VectorXd coefficients, Eigen::VectorXd means, double shape_parameter,
                   int iterations, double loglik)
    : FittedLearner(kind, std::move(hyperparameters), training, std::move(feature_names)),
      intercept_(intercept),
      coefficients_(std::move(coefficients)),
      means_(std::move(means)),
      shape_(shape_parameter),
      iterations_(iterations),
      loglik_(loglik) {}

Eigen::VectorXd AftModel::location(const Eigen::MatrixXd& covariates) const {
  return ((covariates.rowwise() - means_.transpose()) * coefficients_).array() + intercept_;
}

Eigen::VectorXd AftModel::survival_at(const Eigen::MatrixXd& covariates, double t) const {
  const Eigen::VectorXd loc = location(covariates);
  Eigen::VectorXd s(loc.size());
  const double log_t = std::log(t);
  for (Eigen::Index i = 0; i < loc.size(); ++i) {
    if (kind() == LearnerKind::weibull_aft) {
      s[i] = std::exp(-std::exp((log_t - loc[i]) / shape_));
    } else {
      s[i] = boost::math::gamma_q(shape_, std::exp(log_t - loc[i]), quiet_policy());
    }
  }
  return s;
}

nlohmann::json AftModel::parameters_json() const {
  return {{"intercept", intercept_},
          {"coefficients", to_std(coefficients_)},
          {"means", to_std(means_)},
          {kind() == LearnerKind::weibull_aft ? "sigma" : "shape", shape_},
          {"iterations", iterations_},
          {"loglik", loglik_}};
}

std::shared_ptr<const AftModel> AftModel::from_parameters(LearnerKind kind,
                                                          Hyperparameters hyperparameters,
                                                          TrainingInfo training,
                                                          std::vector<std::string> feature_names,
                                                          const nlohmann::json& parameters) {
  auto vec = [&](const char* key) {
    const auto v = parameters.at(key).get<std::vector<double>>();
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  const double shape = parameters.at(kind == LearnerKind::weibull_aft ? "sigma" : "shape").get<double>();
  return std::make_shared<const AftModel>(kind, std::move(hyperparameters), training,
                                          std::move(feature_names),
                                          parameters.at("intercept").get<double>(),
                                          vec("coefficients"), vec("means"), shape,
                                          parameters.value("iterations", 0),
                                          parameters.value("loglik", 0.0));
}

// ---------------------------------------------------------------------------

std::shared_ptr<const AftModel> fit_weibull_aft(const SurvivalDataset& data, const LearnerSpec& spec,
                                                const WeibullAftOptions& options) {
  require_fittable(data, "weibull_aft");
  const AftDesign d = make_design(data);
  const auto q = d.c.cols();

  // Start from the exponential fit of the intercept: sigma = 1 and
  // exp(mu) = total time / events.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(q + 1);
  theta[0] = std::log(d.time.sum() / d.delta.sum());
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  double value = weibull_loglik(d, theta, &grad, &hess);
  nlohmann::json trace = nlohmann::json::array();
  int iteration = 0;
  bool converged = false;
  for (; iteration < options.max_iterations; ++iteration) {
    const double grad_norm = grad.lpNorm<Eigen::Infinity>();
    trace.push_back({{"iteration", iteration}, {"loglik", value}, {"gradient", grad_norm}});
    if (grad_norm < options.gradient_tolerance) {
      converged = true;
      break;
    }
    // Newton direction, regularized toward gradient ascent when the Hessian
    // is not negative definite.
    Eigen::MatrixXd info = -hess;
    Eigen::VectorXd step;
    double ridge = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
      Eigen::LLT<Eigen::MatrixXd> llt(info + ridge * Eigen::MatrixXd::Identity(q + 1, q + 1));
      if (llt.info() == Eigen::Success) {
        step = llt.solve(grad);
        break;
      }
      ridge = ridge == 0.0 ? 1e-8 * std::max(1.0, info.diagonal().cwiseAbs().maxCoeff()) : ridge * 10.0;
    }
    if (step.size() == 0) step = grad;
    double factor = 1.0;
    Eigen::VectorXd next;
    double next_value = -std::numeric_limits<double>::infinity();
    for (int halving = 0; halving < 50; ++halving) {
      next = theta + factor * step;
      next_value = weibull_loglik(d, next, nullptr, nullptr);
      if (std::isfinite(next_value) && next_value >= value - 1e-14 * std::abs(value)) break;
      factor *= 0.5;
    }
    if (!std::isfinite(next_value)) break;
    const double change = (next - theta).lpNorm<Eigen::Infinity>();
    theta = next;
    value = weibull_loglik(d, theta, &grad, &hess);
    if (change <= 1e-14 * std::max(1.0, theta.lpNorm<Eigen::Infinity>())) {
      converged = grad.lpNorm<Eigen::Infinity>() < 1e3 * options.gradient_tolerance;
      break;
    }
  }
  if (!converged) {
    throw NumericalError("nonconvergence", "Weibull AFT Newton-Raphson did not converge",
                         {{"trace", trace}});
  }
  TrainingInfo info{data.size(), data.num_covariates(), data.event_count(), 0};
  return std::make_shared<const AftModel>(
      LearnerKind::weibull_aft, spec.validated().hyperparameters, info, data.covariate_names(),
      theta[0], unstandardize(theta.head(q), d.sd), d.means, std::exp(theta[q]), iteration,
      value * static_cast<double>(data.size()) - d.delta.dot(d.log_time));
}

// ---------------------------------------------------------------------------

namespace {

// Mean gamma log-likelihood at theta = (location coefficients, log shape),
// without the constant -sum(delta log t).
double gamma_loglik(const AftDesign& d, const Eigen::VectorXd& theta) {
  const auto q = d.c.cols();
  const double a = std::exp(theta[q]);
  const double lg = std::lgamma(a);
  const Eigen::VectorXd loc = d.c * theta.head(q);
  double value = 0.0;
  for (Eigen::Index i = 0; i < d.c.rows(); ++i) {
    const double log_u = d.log_time[i] - loc[i];
    const double u = std::exp(log_u);
    if (d.delta[i] == 1.0) {
      value += a * log_u - u - lg;
    } else {
      value += log_gamma_q(a, u);
    }
  }
  return value / static_cast<double>(d.c.rows());
}

void gamma_location_gradient(const AftDesign& d, const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
  const auto q = d.c.cols();
  const double a = std::exp(theta[q]);
  const double lg = std::lgamma(a);
  const Eigen::VectorXd loc = d.c * theta.head(q);
  grad.head(q).setZero();
  for (Eigen::Index i = 0; i < d.c.rows(); ++i) {
    const double log_u = d.log_time[i] - loc[i];
    const double u = std::exp(log_u);
    double g;  // derivative with respect to loc_i
    if (d.delta[i] == 1.0) {
      g = u - a;
    } else {
      g = std::exp(a * log_u - u - lg - log_gamma_q(a, u));
    }
    grad.head(q).noalias() += g * d.c.row(i).transpose();
  }
  grad.head(q) /= static_cast<double>(d.c.rows());
}

}  // namespace

std::shared_ptr<const AftModel> fit_gamma_aft(const SurvivalDataset& data, const LearnerSpec& spec,
                                              const GammaAftOptions& options) {
  require_fittable(data, "gamma_aft");
  const AftDesign d = make_design(data);
  const auto q = d.c.cols();

  // Negative mean log-likelihood; gradient with central differences in log shape.
  const Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    grad.resize(q + 1);
    const double value = gamma_loglik(d, theta);
    if (!std::isfinite(value)) return std::numeric_limits<double>::infinity();
    gamma_location_gradient(d, theta, grad);
    const double h = 1e-6 * std::max(1.0, std::abs(theta[q]));
    Eigen::VectorXd up = theta, down = theta;
    up[q] += h;
    down[q] -= h;
    grad[q] = (gamma_loglik(d, up) - gamma_loglik(d, down)) / (2.0 * h);
    grad = -grad;
    return -value;
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(q + 1);
  theta[0] = std::log(d.time.sum() / d.delta.sum());
  BfgsOptions bfgs;
  bfgs.gradient_tolerance = options.gradient_tolerance;
  bfgs.max_iterations = options.max_iterations;
  const MinimizeResult result = minimize_bfgs(objective, theta, bfgs);
  if (!result.converged) {
    throw NumericalError("nonconvergence", "gamma AFT optimization did not converge: " + result.message,
                         {{"iterations", result.iterations},
                          {"gradient_norm", result.gradient_norm},
                          {"value", result.value}});
  }
  TrainingInfo info{data.size(), data.num_covariates(), data.event_count(), 0};
  return std::make_shared<const AftModel>(
      LearnerKind::gamma_aft, spec.validated().hyperparameters, info, data.covariate_names(),
      result.x[0], unstandardize(result.x.head(q), d.sd), d.means, std::exp(result.x[q]),
      result.iterations,
      -result.value * static_cast<double>(data.size()) - d.delta.dot(d.log_time));
}

}  // namespace survsl
