#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace survsl {

inline constexpr double kRiskClip = 1e-12;

inline double clip_probability(double p, double eps = kRiskClip) {
  return std::clamp(p, eps, 1.0 - eps);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double inverse_logit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7, the R default). `sorted` must be ascending.
inline double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double prob) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, prob);
}

}  // namespace survsl
