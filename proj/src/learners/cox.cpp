#include "survsl/learners/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survsl/error.hpp"

namespace survsl {

namespace {

// Subject indices ordered by decreasing time.
std::vector<std::size_t> descending_time_order(std::span<const double> times) {
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return times[a] > times[b]; });
  return order;
}

}  // namespace

PartialLikelihood cox_partial_likelihood(const Eigen::MatrixXd& x, std::span<const double> times,
                                         std::span<const int> events, const Eigen::VectorXd& beta,
                                         bool with_hessian) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto p = x.cols();
  const Eigen::VectorXd eta = x * beta;
  const double shift = n > 0 ? eta.maxCoeff() : 0.0;
  const auto order = descending_time_order(times);

  PartialLikelihood out;
  out.gradient = Eigen::VectorXd::Zero(p);
  if (with_hessian) out.hessian = Eigen::MatrixXd::Zero(p, p);
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = with_hessian ? Eigen::MatrixXd::Zero(p, p) : Eigen::MatrixXd();

  std::size_t k = 0;
  while (k < n) {
    const double t = times[order[k]];
    std::size_t end = k;
    while (end < n && times[order[end]] == t) {
      const auto i = static_cast<Eigen::Index>(order[end]);
      const double r = std::exp(eta[i] - shift);
      s0 += r;
      s1.noalias() += r * x.row(i).transpose();
      if (with_hessian) s2.noalias() += r * x.row(i).transpose() * x.row(i);
      ++end;
    }
    const double log_s0 = std::log(s0) + shift;
    const Eigen::VectorXd mean = s1 / s0;
    for (std::size_t m = k; m < end; ++m) {
      const auto i = static_cast<Eigen::Index>(order[m]);
      if (events[order[m]] != 1) continue;
      out.loglik += eta[i] - log_s0;
      out.gradient.noalias() += x.row(i).transpose() - mean;
      if (with_hessian) out.hessian.noalias() -= s2 / s0 - mean * mean.transpose();
    }
    k = end;
  }
  return out;
}

double cox_partial_loglik_eta(std::span<const double> times, std::span<const int> events,
                              const Eigen::VectorXd& eta) {
  const auto n = times.size();
  const double shift = n > 0 ? eta.maxCoeff() : 0.0;
  const auto order = descending_time_order(times);
  double s0 = 0.0, loglik = 0.0;
  std::size_t k = 0;
  while (k < n) {
    const double t = times[order[k]];
    std::size_t end = k;
    while (end < n && times[order[end]] == t) {
      s0 += std::exp(eta[static_cast<Eigen::Index>(order[end])] - shift);
      ++end;
    }
    const double log_s0 = std::log(s0) + shift;
    for (std::size_t m = k; m < end; ++m) {
      if (events[order[m]] == 1) loglik += eta[static_cast<Eigen::Index>(order[m])] - log_s0;
    }
    k = end;
  }
  return loglik;
}

StepFunction breslow_cumulative_hazard(std::span<const double> times, std::span<const int> events,
                                       const Eigen::VectorXd& eta) {
  const auto n = times.size();
  const auto order = descending_time_order(times);
  std::vector<double> event_times, increments;
  double s0 = 0.0;
  std::size_t k = 0;
  while (k < n) {
    const double t = times[order[k]];
    std::size_t end = k;
    double deaths = 0.0;
    while (end < n && times[order[end]] == t) {
      s0 += std::exp(eta[static_cast<Eigen::Index>(order[end])]);
      if (events[order[end]] == 1) deaths += 1.0;
      ++end;
    }
    if (deaths > 0.0) {
      event_times.push_back(t);
      increments.push_back(deaths / s0);
    }
    k = end;
  }
  std::reverse(event_times.begin(), event_times.end());
  std::reverse(increments.begin(), increments.end());
  std::vector<double> cumulative(increments.size());
  std::partial_sum(increments.begin(), increments.end(), cumulative.begin());
  return StepFunction(0.0, std::move(event_times), std::move(cumulative));
}

// ---------------------------------------------------------------------------

ProportionalHazardsModel::ProportionalHazardsModel(
    LearnerKind kind, Hyperparameters hyperparameters, TrainingInfo training,
    std::vector<std::string> feature_names, Eigen::VectorXd coefficients, Eigen::VectorXd means,
    StepFunction baseline_cumhaz, Eigen::VectorXd standard_errors, int iterations, double loglik)
    : FittedLearner(kind, std::move(hyperparameters), training, std::move(feature_names)),
      coefficients_(std::move(coefficients)),
      means_(std::move(means)),
      baseline_(std::move(baseline_cumhaz)),
      standard_errors_(std::move(standard_errors)),
      iterations_(iterations),
      loglik_(loglik) {}

Eigen::VectorXd ProportionalHazardsModel::linear_predictor(const Eigen::MatrixXd& covariates) const {
  return (covariates.rowwise() - means_.transpose()) * coefficients_;
}

Eigen::VectorXd ProportionalHazardsModel::survival_at(const Eigen::MatrixXd& covariates,
                                                      double t) const {
  const double h0 = baseline_(t);
  return (-h0 * linear_predictor(covariates).array().exp()).exp().matrix();
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json ProportionalHazardsModel::parameters_json() const {
  nlohmann::json j{{"coefficients", to_std(coefficients_)},
                   {"means", to_std(means_)},
                   {"baseline_cumulative_hazard", baseline_.to_json()},
                   {"iterations", iterations_},
                   {"loglik", loglik_}};
  if (standard_errors_.size() > 0) j["standard_errors"] = to_std(standard_errors_);
  return j;
}

std::shared_ptr<const ProportionalHazardsModel> ProportionalHazardsModel::from_parameters(
    LearnerKind kind, Hyperparameters hyperparameters, TrainingInfo training,
    std::vector<std::string> feature_names, const nlohmann::json& parameters) {
  Eigen::VectorXd se;
  if (parameters.contains("standard_errors")) {
    se = to_eigen(parameters.at("standard_errors").get<std::vector<double>>());
  }
  return std::make_shared<const ProportionalHazardsModel>(
      kind, std::move(hyperparameters), training, std::move(feature_names),
      to_eigen(parameters.at("coefficients").get<std::vector<double>>()),
      to_eigen(parameters.at("means").get<std::vector<double>>()),
      StepFunction::from_json(parameters.at("baseline_cumulative_hazard")), se,
      parameters.value("iterations", 0), parameters.value("loglik", 0.0));
}

// ---------------------------------------------------------------------------

std::shared_ptr<const ProportionalHazardsModel> fit_cox(const SurvivalDataset& data,
                                                        const LearnerSpec& spec,
                                                        const CoxFitOptions& options) {
  require_fittable(data, "cox_main_terms");
  const auto n = data.size();
  const auto p = data.covariates().cols();
  if (p == 0) throw InputError("no_covariates", "Cox model with main terms needs at least one covariate");
  if (n <= static_cast<std::size_t>(p)) {
    throw InputError("too_few_subjects", "Cox model needs more subjects than covariates");
  }
  const Eigen::VectorXd means = data.covariates().colwise().mean();
  const Eigen::MatrixXd x = data.covariates().rowwise() - means.transpose();
  const Eigen::VectorXd sd = (x.array().square().colwise().sum() / static_cast<double>(n)).sqrt();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  auto pl = cox_partial_likelihood(x, data.times(), data.events(), beta);
  nlohmann::json trace = nlohmann::json::array();
  const double scale = static_cast<double>(n);

  int iteration = 0;
  bool converged = false;
  for (; iteration < options.max_iterations; ++iteration) {
    const double grad_norm = pl.gradient.lpNorm<Eigen::Infinity>() / scale;
    trace.push_back({{"iteration", iteration}, {"loglik", pl.loglik}, {"gradient", grad_norm}});
    if (grad_norm < options.gradient_tolerance) {
      converged = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-pl.hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw NumericalError("singular_information",
                           "Cox information matrix is singular (collinear covariates?)",
                           {{"trace", trace}});
    }
    const Eigen::VectorXd step = ldlt.solve(pl.gradient);
    double factor = 1.0;
    PartialLikelihood candidate;
    Eigen::VectorXd next;
    for (int halving = 0; halving < 30; ++halving) {
      next = beta + factor * step;
      candidate = cox_partial_likelihood(x, data.times(), data.events(), next);
      if (std::isfinite(candidate.loglik) && candidate.loglik >= pl.loglik - 1e-12 * std::abs(pl.loglik)) break;
      factor *= 0.5;
    }
    const double change = (next - beta).lpNorm<Eigen::Infinity>();
    beta = next;
    pl = std::move(candidate);
    if ((beta.array().abs() * sd.array()).maxCoeff() > options.separation_bound) {
      throw NumericalError("monotone_likelihood",
                           "Cox coefficients diverge; the partial likelihood is monotone "
                           "(perfect separation on some covariate)",
                           {{"trace", trace}});
    }
    // Newton has reached the floating-point floor of the likelihood surface.
    if (change <= 1e-13 * std::max(1.0, beta.lpNorm<Eigen::Infinity>())) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NumericalError("nonconvergence", "Cox Newton-Raphson did not converge",
                         {{"trace", trace}});
  }
  const Eigen::MatrixXd covariance = (-pl.hessian).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::VectorXd se = covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  StepFunction baseline = breslow_cumulative_hazard(data.times(), data.events(), x * beta);

  TrainingInfo info{n, static_cast<std::size_t>(p), data.event_count(), 0};
  return std::make_shared<const ProportionalHazardsModel>(
      LearnerKind::cox_main_terms, spec.validated().hyperparameters, info, data.covariate_names(),
      beta, means, std::move(baseline), se, iteration, pl.loglik);
}

}  // namespace survsl
