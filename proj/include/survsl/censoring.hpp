#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "survsl/dataset.hpp"
#include "survsl/step_function.hpp"

namespace survsl {

/// Marginal Kaplan-Meier estimate G(t) = P(C > t) of the censoring time.
///
/// Ties: when an event and a censoring share a time, the event is taken to
/// come first, so subjects failing at t are not at risk of being censored at
/// t.
class CensoringModel {
 public:
  CensoringModel() = default;
  CensoringModel(StepFunction survival, double max_time)
      : survival_(std::move(survival)), max_time_(max_time) {}

  double at(double t) const { return survival_(t); }
  double left_limit(double t) const { return survival_.left_limit(t); }
  double max_time() const { return max_time_; }
  const StepFunction& survival() const { return survival_; }

  nlohmann::json to_json() const;
  static CensoringModel from_json(const nlohmann::json& j);

 private:
  StepFunction survival_{1.0, {}, {}};
  double max_time_ = 0.0;
};

CensoringModel fit_censoring_km(const SurvivalDataset& data);

enum class HorizonStatus : int { censored = -1, control = 0, event = 1 };

struct IpcwOptions {
  /// G is floored at this value before inversion; 0 disables the floor.
  double floor = 0.05;
};

/// Inverse-probability-of-censoring weights at horizon tau.
///   event by tau (T <= tau, delta = 1):  1 / G(T-)
///   known event-free at tau (T >= tau): 1 / G(tau-)
///   censored before tau:                0
/// For subjects followed strictly past tau, G(tau-) equals G(tau) unless a
/// censoring falls exactly on tau; using the left limit keeps subjects that
/// are administratively censored at tau in the control group.
struct IpcwWeights {
  double tau = 0.0;
  double floor = 0.0;
  std::vector<double> weights;
  std::vector<HorizonStatus> status;
  std::size_t floored_count = 0;

  std::size_t size() const { return weights.size(); }
  /// Y_i(tau): 1 for an observed event by tau, else 0.
  double outcome(std::size_t i) const { return status[i] == HorizonStatus::event ? 1.0 : 0.0; }
  bool eligible(std::size_t i) const { return status[i] != HorizonStatus::censored; }
  IpcwWeights subset(std::span<const std::size_t> rows) const;
};

IpcwWeights ipcw_weights(const CensoringModel& model, const SurvivalDataset& data, double tau,
                         const IpcwOptions& options = {});

}  // namespace survsl
