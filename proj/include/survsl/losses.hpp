#pragma once

#include <span>
#include <string>
#include <string_view>

#include "survsl/censoring.hpp"

namespace survsl {

/// Censoring-aware losses at the horizon, all oriented so that lower is
/// better (the AUC loss is reported as 1 - AUC).
enum class LossKind { ipcw_brier, negative_binomial_loglik, auroc_t };

std::string_view to_string(LossKind kind);
/// Accepts the long names and the CLI short forms brier, nbll, auroct.
LossKind loss_kind_from_string(std::string_view name);

/// (1/n) sum_i w_i (Y_i(tau) - risk_i)^2, averaged over all n subjects
/// including those with zero weight.
double ipcw_brier(std::span<const double> risk, const IpcwWeights& weights);

inline constexpr double kLogLossClip = 1e-12;

/// -(1/n) sum_i w_i [Y log r + (1 - Y) log(1 - r)], risks clipped to
/// [1e-12, 1 - 1e-12].
double negative_binomial_loglik(std::span<const double> risk, const IpcwWeights& weights);

/// IPCW cumulative/dynamic AUC at the horizon: cases are events by tau
/// weighted 1/G(T-), controls are subjects event-free at tau weighted
/// 1/G(tau-). Each case-control pair contributes the product of weights,
/// counted fully when the case has the higher risk and half on a tie.
/// O(n log n). Throws InputError("undefined_auc") without a weighted case and
/// a weighted control.
double ipcw_auc(std::span<const double> risk, const IpcwWeights& weights);

double auroc_t_loss(std::span<const double> risk, const IpcwWeights& weights);

double evaluate_loss(LossKind kind, std::span<const double> risk, const IpcwWeights& weights);

}  // namespace survsl
