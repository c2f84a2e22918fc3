#include "survsl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "survsl/error.hpp"
#include "survsl/numeric.hpp"

namespace survsl {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::ipcw_brier: return "ipcw_brier";
    case LossKind::negative_binomial_loglik: return "negative_binomial_loglik";
    case LossKind::auroc_t: return "auroc_t";
  }
  return "unknown";
}

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "ipcw_brier" || name == "brier") return LossKind::ipcw_brier;
  if (name == "negative_binomial_loglik" || name == "nbll") return LossKind::negative_binomial_loglik;
  if (name == "auroc_t" || name == "auroct") return LossKind::auroc_t;
  throw InputError("unknown_loss", "unknown loss '" + std::string(name) +
                                       "' (expected brier, nbll or auroct)");
}

namespace {

void check_lengths(std::span<const double> risk, const IpcwWeights& weights) {
  if (risk.size() != weights.size()) {
    throw InputError("length_mismatch", "risk vector has " + std::to_string(risk.size()) +
                                            " entries but weights have " +
                                            std::to_string(weights.size()));
  }
  if (risk.empty()) throw InputError("empty_dataset", "loss of an empty cohort");
}

void check_probabilities(std::span<const double> risk) {
  for (std::size_t i = 0; i < risk.size(); ++i) {
    if (!(risk[i] >= 0.0 && risk[i] <= 1.0)) {
      throw InputError("invalid_risk", "risk " + std::to_string(risk[i]) + " at subject " +
                                           std::to_string(i) + " is outside [0, 1]",
                       {{"subject", i}});
    }
  }
}

}  // namespace

double ipcw_brier(std::span<const double> risk, const IpcwWeights& weights) {
  check_lengths(risk, weights);
  check_probabilities(risk);
  double total = 0.0;
  for (std::size_t i = 0; i < risk.size(); ++i) {
    const double r = weights.outcome(i) - risk[i];
    total += weights.weights[i] * r * r;
  }
  return total / static_cast<double>(risk.size());
}

double negative_binomial_loglik(std::span<const double> risk, const IpcwWeights& weights) {
  check_lengths(risk, weights);
  check_probabilities(risk);
  double total = 0.0;
  for (std::size_t i = 0; i < risk.size(); ++i) {
    if (weights.weights[i] == 0.0) continue;
    const double r = clip_probability(risk[i], kLogLossClip);
    const double y = weights.outcome(i);
    total += weights.weights[i] * (y * std::log(r) + (1.0 - y) * std::log1p(-r));
  }
  return -total / static_cast<double>(risk.size());
}

double ipcw_auc(std::span<const double> risk, const IpcwWeights& weights) {
  check_lengths(risk, weights);
  std::vector<std::pair<double, double>> controls;  // (risk, weight)
  std::vector<std::pair<double, double>> cases;
  for (std::size_t i = 0; i < risk.size(); ++i) {
    if (weights.weights[i] <= 0.0) continue;
    if (weights.status[i] == HorizonStatus::event) {
      cases.emplace_back(risk[i], weights.weights[i]);
    } else if (weights.status[i] == HorizonStatus::control) {
      controls.emplace_back(risk[i], weights.weights[i]);
    }
  }
  if (cases.empty() || controls.empty()) {
    throw InputError("undefined_auc", "AUC needs at least one case and one control at the horizon",
                     {{"cases", cases.size()}, {"controls", controls.size()}});
  }
  std::sort(controls.begin(), controls.end());
  std::vector<double> control_risk(controls.size());
  std::vector<double> cumulative(controls.size() + 1, 0.0);
  for (std::size_t j = 0; j < controls.size(); ++j) {
    control_risk[j] = controls[j].first;
    cumulative[j + 1] = cumulative[j] + controls[j].second;
  }
  const double control_total = cumulative.back();
  double concordant = 0.0, case_total = 0.0;
  for (const auto& [r, w] : cases) {
    const auto lo = static_cast<std::size_t>(
        std::lower_bound(control_risk.begin(), control_risk.end(), r) - control_risk.begin());
    const auto hi = static_cast<std::size_t>(
        std::upper_bound(control_risk.begin(), control_risk.end(), r) - control_risk.begin());
    concordant += w * (cumulative[lo] + 0.5 * (cumulative[hi] - cumulative[lo]));
    case_total += w;
  }
  return concordant / (case_total * control_total);
}

double auroc_t_loss(std::span<const double> risk, const IpcwWeights& weights) {
  return 1.0 - ipcw_auc(risk, weights);
}

double evaluate_loss(LossKind kind, std::span<const double> risk, const IpcwWeights& weights) {
  switch (kind) {
    case LossKind::ipcw_brier: return ipcw_brier(risk, weights);
    case LossKind::negative_binomial_loglik: return negative_binomial_loglik(risk, weights);
    case LossKind::auroc_t: return auroc_t_loss(risk, weights);
  }
  throw InputError("unknown_loss", "unknown loss kind");
}

}  // namespace survsl
