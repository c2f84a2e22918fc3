#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace survsl {

/// Objective returning f(x) and writing the gradient into `grad`.
/// A non-finite value marks x as infeasible; line searches back off from it.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;  // infinity norm at x
  int iterations = 0;
  bool converged = false;
  std::string message;
};

struct BfgsOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 500;
};

/// Quasi-Newton minimization with Armijo backtracking. Converged means
/// ||grad||_inf < gradient_tolerance.
MinimizeResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& options = {});

struct NelderMeadOptions {
  double initial_step = 1.0;
  double value_tolerance = 1e-12;
  int max_evaluations = 2000;
};

MinimizeResult minimize_nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    Eigen::VectorXd x0, const NelderMeadOptions& options = {});

/// Euclidean projection onto the probability simplex {w >= 0, sum w = 1}.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

/// Central finite-difference gradient; used by the gamma AFT shape parameter
/// and by tests.
Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, double relative_step = 1e-6);

}  // namespace survsl
