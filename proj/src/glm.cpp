#include "survsl/glm.hpp"

#include <cmath>

#include "survsl/error.hpp"
#include "survsl/numeric.hpp"

namespace survsl {

namespace {

double log1p_exp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double weighted_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (w[i] != 0.0) ll += w[i] * (y[i] * eta[i] - log1p_exp(eta[i]));
  }
  return ll;
}

}  // namespace

LogisticFit fit_weighted_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& weights, const Eigen::VectorXd& offset) {
  const auto n = design.rows();
  const auto p = design.cols();
  if (y.size() != n || weights.size() != n || (offset.size() != 0 && offset.size() != n)) {
    throw InputError("length_mismatch", "logistic regression inputs must align");
  }
  const Eigen::VectorXd off = offset.size() == 0 ? Eigen::VectorXd::Zero(n) : offset;

  LogisticFit fit;
  fit.coefficients = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = design * fit.coefficients + off;
  double ll = weighted_loglik(eta, y, weights);

  for (fit.iterations = 1; fit.iterations <= 200; ++fit.iterations) {
    Eigen::VectorXd score = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (weights[i] == 0.0) continue;
      const double mu = inverse_logit(eta[i]);
      const auto row = design.row(i);
      score.noalias() += weights[i] * (y[i] - mu) * row.transpose();
      info.noalias() += weights[i] * mu * (1.0 - mu) * row.transpose() * row;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(info);
    qr.setThreshold(1e-12);
    if (qr.rank() < p) {
      throw NumericalError("degenerate_design",
                           "logistic regression design is rank deficient (constant predictor?)");
    }
    Eigen::VectorXd step = qr.solve(score);
    double scale = 1.0;
    Eigen::VectorXd candidate;
    double ll_new = ll;
    for (int halving = 0; halving < 40; ++halving) {
      candidate = fit.coefficients + scale * step;
      eta = design * candidate + off;
      ll_new = weighted_loglik(eta, y, weights);
      if (std::isfinite(ll_new) && ll_new >= ll - 1e-12 * std::abs(ll)) break;
      scale *= 0.5;
    }
    const double change = (candidate - fit.coefficients).lpNorm<Eigen::Infinity>();
    fit.coefficients = candidate;
    ll = ll_new;
    if (fit.coefficients.lpNorm<Eigen::Infinity>() > 1e6) break;
    if (change <= 1e-10 * std::max(1.0, fit.coefficients.lpNorm<Eigen::Infinity>())) return fit;
  }
  throw NumericalError("logistic_nonconvergence",
                       "weighted logistic regression did not converge (complete separation?)");
}

}  // namespace survsl
