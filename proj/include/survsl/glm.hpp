#pragma once

#include <Eigen/Dense>

namespace survsl {

struct LogisticFit {
  Eigen::VectorXd coefficients;
  int iterations = 0;
};

/// Weighted logistic regression by Newton-Raphson with step halving:
/// maximizes sum_i w_i [y_i eta_i - log(1 + exp(eta_i))], eta = X b + offset.
/// Rows with zero weight do not contribute. Iterates to machine precision
/// (relative coefficient change below 1e-14) so that fits on identical data
/// agree regardless of row order to rounding error.
/// Throws NumericalError("degenerate_design") when X'WX is singular and
/// NumericalError("logistic_nonconvergence") on separation.
LogisticFit fit_weighted_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& weights,
                                  const Eigen::VectorXd& offset = Eigen::VectorXd());

}  // namespace survsl
