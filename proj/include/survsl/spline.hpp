#pragma once

#include <vector>

#include <Eigen/Dense>

namespace survsl {

/// Restricted (natural) cubic spline with knots k_0 < ... < k_{K-1}: cubic
/// between knots, linear beyond the boundary knots. The basis is
///   [u, v_1(u), ..., v_{K-2}(u)]
/// with v_j(u) = ((u-k_j)_+^3 - l_j (u-k_0)_+^3 - (1-l_j)(u-k_{K-1})_+^3) / (k_{K-1}-k_0)^2
/// and l_j = (k_{K-1}-k_j)/(k_{K-1}-k_0). No intercept column.
class RestrictedCubicSpline {
 public:
  RestrictedCubicSpline() = default;
  explicit RestrictedCubicSpline(std::vector<double> knots);

  const std::vector<double>& knots() const { return knots_; }
  int num_basis() const { return static_cast<int>(knots_.size()) - 1; }

  Eigen::VectorXd basis(double u) const;
  /// d/du of basis(u).
  Eigen::VectorXd derivative(double u) const;
  Eigen::MatrixXd basis(const Eigen::VectorXd& u) const;

 private:
  std::vector<double> knots_;
};

}  // namespace survsl
