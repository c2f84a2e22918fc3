#include "survsl/spline.hpp"

#include <algorithm>

#include "survsl/error.hpp"

namespace survsl {

RestrictedCubicSpline::RestrictedCubicSpline(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw InputError("invalid_knots", "a spline needs at least two knots");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) {
      throw InputError("invalid_knots", "spline knots must be strictly increasing");
    }
  }
}

Eigen::VectorXd RestrictedCubicSpline::basis(double u) const {
  const auto k = knots_.size();
  Eigen::VectorXd b(num_basis());
  b[0] = u;
  const double lo = knots_.front(), hi = knots_.back();
  const double scale = (hi - lo) * (hi - lo);
  auto cube = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
  for (std::size_t j = 1; j + 1 < k; ++j) {
    const double l = (hi - knots_[j]) / (hi - lo);
    b[static_cast<Eigen::Index>(j)] =
        (cube(u - knots_[j]) - l * cube(u - lo) - (1.0 - l) * cube(u - hi)) / scale;
  }
  return b;
}

Eigen::VectorXd RestrictedCubicSpline::derivative(double u) const {
  const auto k = knots_.size();
  Eigen::VectorXd d(num_basis());
  d[0] = 1.0;
  const double lo = knots_.front(), hi = knots_.back();
  const double scale = (hi - lo) * (hi - lo);
  auto square3 = [](double v) { return v > 0.0 ? 3.0 * v * v : 0.0; };
  for (std::size_t j = 1; j + 1 < k; ++j) {
    const double l = (hi - knots_[j]) / (hi - lo);
    d[static_cast<Eigen::Index>(j)] =
        (square3(u - knots_[j]) - l * square3(u - lo) - (1.0 - l) * square3(u - hi)) / scale;
  }
  return d;
}

Eigen::MatrixXd RestrictedCubicSpline::basis(const Eigen::VectorXd& u) const {
  Eigen::MatrixXd m(u.size(), num_basis());
  for (Eigen::Index i = 0; i < u.size(); ++i) m.row(i) = basis(u[i]).transpose();
  return m;
}

}  // namespace survsl
