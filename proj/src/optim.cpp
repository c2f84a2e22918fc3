#include "survsl/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace survsl {

MinimizeResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& options) {
  const auto dim = x0.size();
  MinimizeResult r;
  r.x = std::move(x0);
  Eigen::VectorXd g(dim), g_new(dim);
  r.value = f(r.x, g);
  if (!std::isfinite(r.value)) {
    r.message = "objective is not finite at the starting point";
    return r;
  }
  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(dim, dim);
  bool just_reset = true;

  for (r.iterations = 0; r.iterations < options.max_iterations; ++r.iterations) {
    r.gradient_norm = g.lpNorm<Eigen::Infinity>();
    if (r.gradient_norm < options.gradient_tolerance) {
      r.converged = true;
      r.message = "gradient tolerance reached";
      return r;
    }
    Eigen::VectorXd direction = -inv_hessian * g;
    double slope = g.dot(direction);
    if (!(slope < 0.0)) {
      inv_hessian.setIdentity();
      direction = -g;
      slope = -g.squaredNorm();
      just_reset = true;
    }
    // First step after a reset is scaled so it cannot overshoot wildly.
    double step = just_reset ? std::min(1.0, 1.0 / std::max(1.0, direction.lpNorm<Eigen::Infinity>())) : 1.0;
    Eigen::VectorXd x_new;
    double value_new = 0.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      x_new = r.x + step * direction;
      value_new = f(x_new, g_new);
      if (std::isfinite(value_new) && value_new <= r.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!just_reset) {
        inv_hessian.setIdentity();
        just_reset = true;
        continue;
      }
      r.message = "line search failed";
      return r;
    }
    const Eigen::VectorXd s = x_new - r.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (just_reset) inv_hessian *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
      inv_hessian = (eye - rho * s * y.transpose()) * inv_hessian * (eye - rho * y * s.transpose()) +
                    rho * s * s.transpose();
      just_reset = false;
    }
    r.x = std::move(x_new);
    r.value = value_new;
    g = g_new;
  }
  r.gradient_norm = g.lpNorm<Eigen::Infinity>();
  r.converged = r.gradient_norm < options.gradient_tolerance;
  r.message = r.converged ? "gradient tolerance reached" : "iteration limit reached";
  return r;
}

MinimizeResult minimize_nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    Eigen::VectorXd x0, const NelderMeadOptions& options) {
  const auto dim = x0.size();
  std::vector<Eigen::VectorXd> simplex{x0};
  for (Eigen::Index i = 0; i < dim; ++i) {
    Eigen::VectorXd v = x0;
    v[i] += options.initial_step;
    simplex.push_back(v);
  }
  std::vector<double> values;
  int evaluations = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  for (const auto& v : simplex) values.push_back(eval(v));

  std::vector<std::size_t> order(simplex.size());
  MinimizeResult r;
  int iterations = 0;
  while (evaluations < options.max_evaluations) {
    ++iterations;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const auto best = order.front(), worst = order.back(), second = order[order.size() - 2];
    if (std::abs(values[worst] - values[best]) <= options.value_tolerance) {
      r.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (std::size_t k = 0; k + 1 < order.size(); ++k) centroid += simplex[order[k]];
    centroid /= static_cast<double>(dim);

    const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
    const double fr = eval(reflected);
    if (fr < values[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
    } else if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
    } else {
      const bool outside = fr < values[worst];
      const Eigen::VectorXd contracted =
          outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                  : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
      const double fc = eval(contracted);
      if (fc < std::min(fr, values[worst])) {
        simplex[worst] = contracted;
        values[worst] = fc;
      } else {
        for (std::size_t k = 1; k < order.size(); ++k) {
          const auto idx = order[k];
          simplex[idx] = simplex[best] + 0.5 * (simplex[idx] - simplex[best]);
          values[idx] = eval(simplex[idx]);
        }
      }
    }
  }
  const auto best = static_cast<std::size_t>(
      std::min_element(values.begin(), values.end()) - values.begin());
  r.x = simplex[best];
  r.value = values[best];
  r.iterations = iterations;
  r.message = r.converged ? "simplex collapsed" : "evaluation limit reached";
  return r;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const auto n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += u[static_cast<std::size_t>(k)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[static_cast<std::size_t>(k)] - candidate > 0.0) theta = candidate;
  }
  Eigen::VectorXd w = (v.array() - theta).max(0.0);
  const double total = w.sum();
  if (total > 0.0) w /= total;
  return w;
}

Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, double relative_step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = relative_step * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace survsl
