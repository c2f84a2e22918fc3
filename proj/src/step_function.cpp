#include "survsl/step_function.hpp"

#include <algorithm>
#include <numeric>

#include "survsl/error.hpp"

namespace survsl {

StepFunction::StepFunction(double initial, std::vector<double> jump_times,
                           std::vector<double> values)
    : initial_(initial), jump_times_(std::move(jump_times)), values_(std::move(values)) {
  if (jump_times_.size() != values_.size()) {
    throw InputError("length_mismatch", "step function needs one value per jump time");
  }
  if (!std::is_sorted(jump_times_.begin(), jump_times_.end())) {
    throw InputError("unsorted_jumps", "step function jump times must be sorted");
  }
}

double StepFunction::operator()(double t) const {
  const auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
  const auto it = std::lower_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

nlohmann::json StepFunction::to_json() const {
  return {{"initial", initial_}, {"times", jump_times_}, {"values", values_}};
}

StepFunction StepFunction::from_json(const nlohmann::json& j) {
  return StepFunction(j.at("initial").get<double>(), j.at("times").get<std::vector<double>>(),
                      j.at("values").get<std::vector<double>>());
}

namespace {

struct TimeGroup {
  double time;
  double events;
  double at_risk;
};

// Distinct times carrying at least one flagged row, with the flagged count and
// the number at risk (time >= t).
std::vector<TimeGroup> group_events(std::span<const double> times, std::span<const int> is_event,
                                    std::span<const double> multiplicity) {
  const auto n = times.size();
  if (is_event.size() != n || (!multiplicity.empty() && multiplicity.size() != n)) {
    throw InputError("length_mismatch", "times, indicators and multiplicities must align");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  auto mult = [&](std::size_t i) { return multiplicity.empty() ? 1.0 : multiplicity[i]; };

  double remaining = 0.0;
  for (std::size_t i = 0; i < n; ++i) remaining += mult(i);

  std::vector<TimeGroup> groups;
  std::size_t k = 0;
  while (k < n) {
    const double t = times[order[k]];
    double flagged = 0.0, total = 0.0;
    std::size_t end = k;
    while (end < n && times[order[end]] == t) {
      total += mult(order[end]);
      if (is_event[order[end]] == 1) flagged += mult(order[end]);
      ++end;
    }
    if (flagged > 0.0) groups.push_back({t, flagged, remaining});
    remaining -= total;
    k = end;
  }
  return groups;
}

}  // namespace

StepFunction kaplan_meier(std::span<const double> times, std::span<const int> is_event,
                          std::span<const double> multiplicity) {
  std::vector<double> jumps, values;
  double surv = 1.0;
  for (const auto& g : group_events(times, is_event, multiplicity)) {
    surv *= 1.0 - g.events / g.at_risk;
    jumps.push_back(g.time);
    values.push_back(surv);
  }
  return StepFunction(1.0, std::move(jumps), std::move(values));
}

StepFunction nelson_aalen(std::span<const double> times, std::span<const int> is_event,
                          std::span<const double> multiplicity) {
  std::vector<double> jumps, values;
  double cumhaz = 0.0;
  for (const auto& g : group_events(times, is_event, multiplicity)) {
    cumhaz += g.events / g.at_risk;
    jumps.push_back(g.time);
    values.push_back(cumhaz);
  }
  return StepFunction(0.0, std::move(jumps), std::move(values));
}

}  // namespace survsl
