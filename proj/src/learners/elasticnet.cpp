#include <algorithm>
#include <cmath>
#include <numeric>

#include "survsl/error.hpp"
#include "survsl/learners/cox.hpp"

namespace survsl {

namespace {

double soft_threshold(double z, double gamma) {
  const double magnitude = std::abs(z) - gamma;
  if (magnitude <= 1e-12 * std::max(1.0, std::abs(z))) return 0.0;
  return z > 0.0 ? magnitude : -magnitude;
}

// Diagonal weights and working responses of the quadratic approximation of
// the Breslow log partial likelihood around eta.
struct WorkingResponse {
  Eigen::VectorXd w;
  Eigen::VectorXd z;
};

WorkingResponse working_response(std::span<const double> times, std::span<const int> events,
                                 const Eigen::VectorXd& eta) {
  const auto n = times.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  const double shift = eta.maxCoeff();

  // Risk-set sums at each tie group, accumulated from the largest time down.
  std::vector<double> group_s0(n, 0.0);
  std::vector<std::size_t> group_end(n);
  {
    double s0 = 0.0;
    std::size_t k = n;
    while (k > 0) {
      const double t = times[order[k - 1]];
      std::size_t start = k;
      while (start > 0 && times[order[start - 1]] == t) {
        s0 += std::exp(eta[static_cast<Eigen::Index>(order[start - 1])] - shift);
        --start;
      }
      for (std::size_t m = start; m < k; ++m) {
        group_s0[m] = s0;
        group_end[m] = k;
      }
      k = start;
    }
  }

  WorkingResponse out{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)), eta};
  double a = 0.0, b = 0.0;  // sum d_i / S0_i and sum d_i / S0_i^2 over event times <= t
  std::size_t k = 0;
  while (k < n) {
    const std::size_t end = group_end[k];
    double deaths = 0.0;
    for (std::size_t m = k; m < end; ++m) deaths += events[order[m]] == 1 ? 1.0 : 0.0;
    if (deaths > 0.0) {
      a += deaths / group_s0[k];
      b += deaths / (group_s0[k] * group_s0[k]);
    }
    for (std::size_t m = k; m < end; ++m) {
      const auto i = static_cast<Eigen::Index>(order[m]);
      const double r = std::exp(eta[i] - shift);
      const double w = r * a - r * r * b;
      const double grad = (events[order[m]] == 1 ? 1.0 : 0.0) - r * a;
      if (w > 0.0) {
        out.w[i] = w;
        out.z[i] = eta[i] + grad / w;
      }
    }
    k = end;
  }
  return out;
}

}  // namespace

std::shared_ptr<const ProportionalHazardsModel> fit_elasticnet_cox(const SurvivalDataset& data,
                                                                   const LearnerSpec& raw,
                                                                   const ElasticNetOptions& options) {
  require_fittable(data, "elasticnet_cox");
  const LearnerSpec spec = raw.validated();
  const double alpha = spec.get("alpha");
  const double lambda = spec.get("lambda");
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto p = data.covariates().cols();
  if (p == 0) throw InputError("no_covariates", "elastic-net Cox needs at least one covariate");
  const double nd = static_cast<double>(n);

  const Eigen::VectorXd means = data.covariates().colwise().mean();
  Eigen::MatrixXd xs = data.covariates().rowwise() - means.transpose();
  Eigen::VectorXd sd = (xs.array().square().colwise().sum() / nd).sqrt();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (sd[j] > 0.0) {
      xs.col(j) /= sd[j];
    } else {
      xs.col(j).setZero();
    }
  }

  auto objective = [&](const Eigen::VectorXd& beta) {
    const double loglik = cox_partial_loglik_eta(data.times(), data.events(), xs * beta);
    return -loglik / nd + lambda * (alpha * beta.lpNorm<1>() + 0.5 * (1.0 - alpha) * beta.squaredNorm());
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double current = objective(beta);
  int sweeps = 0;
  int outer = 0;
  bool converged = false;
  for (; outer < options.max_outer; ++outer) {
    const Eigen::VectorXd eta = xs * beta;
    const auto wr = working_response(data.times(), data.events(), eta);
    Eigen::VectorXd candidate = beta;
    Eigen::VectorXd residual = wr.z - eta;
    Eigen::VectorXd curvature(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      curvature[j] = (wr.w.array() * xs.col(j).array().square()).sum() / nd;
    }
    // Cyclical coordinate descent on the weighted least-squares surrogate.
    for (;;) {
      if (++sweeps > options.max_sweeps) {
        throw NumericalError("nonconvergence",
                             "elastic-net coordinate descent exceeded " +
                                 std::to_string(options.max_sweeps) + " sweeps",
                             {{"sweeps", options.max_sweeps}, {"outer_iterations", outer}});
      }
      double max_change = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (sd[j] == 0.0) continue;
        const double old = candidate[j];
        const double u =
            (wr.w.array() * xs.col(j).array() * residual.array()).sum() / nd + curvature[j] * old;
        const double updated =
            soft_threshold(u, lambda * alpha) / (curvature[j] + lambda * (1.0 - alpha));
        if (updated != old) {
          residual -= (updated - old) * xs.col(j);
          candidate[j] = updated;
          max_change = std::max(max_change, std::abs(updated - old));
        }
      }
      if (max_change < 1e-9) break;
    }
    // Guard against overshooting on the true penalized objective.
    double value = objective(candidate);
    for (int halving = 0; halving < 30 && !(value <= current + 1e-15 * std::abs(current)); ++halving) {
      candidate = 0.5 * (beta + candidate);
      value = objective(candidate);
    }
    const double change = (candidate - beta).lpNorm<Eigen::Infinity>();
    beta = candidate;
    current = value;
    if (change < options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NumericalError("nonconvergence", "elastic-net Cox outer iterations did not converge",
                         {{"outer_iterations", outer}});
  }

  Eigen::VectorXd coefficients(p);
  for (Eigen::Index j = 0; j < p; ++j) coefficients[j] = sd[j] > 0.0 ? beta[j] / sd[j] : 0.0;
  StepFunction baseline = breslow_cumulative_hazard(data.times(), data.events(), xs * beta);
  TrainingInfo info{data.size(), static_cast<std::size_t>(p), data.event_count(), 0};
  return std::make_shared<const ProportionalHazardsModel>(
      LearnerKind::elasticnet_cox, spec.hyperparameters, info, data.covariate_names(), coefficients,
      means, std::move(baseline), Eigen::VectorXd(), outer + 1,
      cox_partial_loglik_eta(data.times(), data.events(), xs * beta));
}

}  // namespace survsl
