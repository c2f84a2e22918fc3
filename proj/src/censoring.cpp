#include "survsl/censoring.hpp"

#include <algorithm>
#include <numeric>

#include "survsl/error.hpp"

namespace survsl {

nlohmann::json CensoringModel::to_json() const {
  return {{"survival", survival_.to_json()}, {"max_time", max_time_}};
}

CensoringModel CensoringModel::from_json(const nlohmann::json& j) {
  return CensoringModel(StepFunction::from_json(j.at("survival")), j.at("max_time").get<double>());
}

CensoringModel fit_censoring_km(const SurvivalDataset& data) {
  const auto n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data.time(a) < data.time(b); });

  std::vector<double> jumps, values;
  double surv = 1.0;
  std::size_t remaining = n;  // subjects with time >= current time
  std::size_t k = 0;
  while (k < n) {
    const double t = data.time(order[k]);
    std::size_t events = 0, censored = 0;
    while (k < n && data.time(order[k]) == t) {
      (data.event(order[k]) ? events : censored) += 1;
      ++k;
    }
    if (censored > 0) {
      // Event-first: the failures at t have left before censoring happens.
      const auto at_risk = static_cast<double>(remaining - events);
      surv *= 1.0 - static_cast<double>(censored) / at_risk;
      jumps.push_back(t);
      values.push_back(surv);
    }
    remaining -= events + censored;
  }
  return CensoringModel(StepFunction(1.0, std::move(jumps), std::move(values)), data.max_time());
}

IpcwWeights IpcwWeights::subset(std::span<const std::size_t> rows) const {
  IpcwWeights out;
  out.tau = tau;
  out.floor = floor;
  for (auto i : rows) {
    out.weights.push_back(weights.at(i));
    out.status.push_back(status[i]);
  }
  return out;
}

IpcwWeights ipcw_weights(const CensoringModel& model, const SurvivalDataset& data, double tau,
                         const IpcwOptions& options) {
  if (!(tau > 0.0)) throw InputError("invalid_horizon", "horizon must be positive");
  if (tau > model.max_time()) {
    throw InputError("horizon_beyond_follow_up",
                     "horizon " + std::to_string(tau) + " exceeds the censoring model's follow-up " +
                         std::to_string(model.max_time()),
                     {{"tau", tau}, {"max_time", model.max_time()}});
  }
  if (!(options.floor >= 0.0 && options.floor < 1.0)) {
    throw InputError("invalid_floor", "IPCW floor must lie in [0, 1)");
  }

  IpcwWeights w;
  w.tau = tau;
  w.floor = options.floor;
  w.weights.resize(data.size(), 0.0);
  w.status.resize(data.size(), HorizonStatus::censored);
  std::vector<std::size_t> degenerate;
  const double g_tau = model.left_limit(tau);

  for (std::size_t i = 0; i < data.size(); ++i) {
    const double t = data.time(i);
    double g;
    if (data.event(i) && t <= tau) {
      w.status[i] = HorizonStatus::event;
      g = model.left_limit(t);
    } else if (t >= tau) {
      w.status[i] = HorizonStatus::control;
      g = g_tau;
    } else {
      continue;
    }
    if (g < options.floor) {
      g = options.floor;
      ++w.floored_count;
    }
    if (!(g > 0.0)) {
      degenerate.push_back(i);
      continue;
    }
    w.weights[i] = 1.0 / g;
  }
  if (!degenerate.empty()) {
    throw NumericalError("degenerate_weights",
                         std::to_string(degenerate.size()) +
                             " subjects need an inverse censoring weight where G = 0",
                         {{"subjects", degenerate}});
  }
  return w;
}

}  // namespace survsl
