#pragma once

#include <span>
#include <vector>

#include "json.hpp"

namespace survsl {

/// Right-continuous step function: `initial` before the first jump, then
/// values[k] on [jump_times[k], jump_times[k+1]).
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(double initial, std::vector<double> jump_times, std::vector<double> values);

  double operator()(double t) const;
  /// Limit from the left, f(t-): only jumps strictly before t count.
  double left_limit(double t) const;

  double initial() const { return initial_; }
  const std::vector<double>& jump_times() const { return jump_times_; }
  const std::vector<double>& values() const { return values_; }
  bool empty() const { return jump_times_.empty(); }

  nlohmann::json to_json() const;
  static StepFunction from_json(const nlohmann::json& j);

 private:
  double initial_ = 0.0;
  std::vector<double> jump_times_;
  std::vector<double> values_;
};

/// Product-limit survival estimate of the time to an event flagged by
/// `is_event`. Subjects with time equal to an event time are at risk at that
/// time. Optional multiplicities weight each row (bootstrap in-bag counts).
StepFunction kaplan_meier(std::span<const double> times, std::span<const int> is_event,
                          std::span<const double> multiplicity = {});

/// Nelson-Aalen cumulative hazard, same conventions as kaplan_meier.
StepFunction nelson_aalen(std::span<const double> times, std::span<const int> is_event,
                          std::span<const double> multiplicity = {});

}  // namespace survsl
