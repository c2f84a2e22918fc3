#include "survsl/learners/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survsl/error.hpp"
#include "survsl/learners/cox.hpp"
#include "survsl/random.hpp"

namespace survsl {

Eigen::VectorXd NetworkWeights::flatten() const {
  Eigen::VectorXd flat(size());
  flat << Eigen::Map<const Eigen::VectorXd>(w1.data(), w1.size()), b1, w2;
  return flat;
}

NetworkWeights NetworkWeights::unflatten(const Eigen::VectorXd& flat, Eigen::Index hidden,
                                         Eigen::Index p) {
  NetworkWeights w;
  w.w1 = Eigen::Map<const Eigen::MatrixXd>(flat.data(), hidden, p);
  w.b1 = flat.segment(hidden * p, hidden);
  w.w2 = flat.segment(hidden * p + hidden, hidden);
  return w;
}

Eigen::VectorXd NetworkWeights::forward(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd hidden = ((x * w1.transpose()).rowwise() + b1.transpose()).array().tanh();
  return hidden * w2;
}

NetworkLoss network_loss_and_gradient(const NetworkWeights& weights, const Eigen::MatrixXd& x,
                                      std::span<const double> times, std::span<const int> events,
                                      double decay) {
  const auto m = x.rows();
  const Eigen::MatrixXd hidden =
      ((x * weights.w1.transpose()).rowwise() + weights.b1.transpose()).array().tanh();
  const Eigen::VectorXd eta = hidden * weights.w2;

  // d(-log PL)/d eta_k = -(delta_k - exp(eta_k) sum_{event i: T_i <= T_k} 1 / S0_i)
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return times[static_cast<std::size_t>(a)] > times[static_cast<std::size_t>(b)];
  });
  const double shift = m > 0 ? eta.maxCoeff() : 0.0;
  std::vector<double> group_s0(static_cast<std::size_t>(m));
  std::vector<double> group_deaths(static_cast<std::size_t>(m));
  double s0 = 0.0, loglik = 0.0;
  std::size_t k = 0;
  const auto mm = static_cast<std::size_t>(m);
  std::vector<std::size_t> group_start(mm);
  while (k < mm) {
    const double t = times[static_cast<std::size_t>(order[k])];
    std::size_t end = k;
    double deaths = 0.0;
    while (end < mm && times[static_cast<std::size_t>(order[end])] == t) {
      s0 += std::exp(eta[order[end]] - shift);
      if (events[static_cast<std::size_t>(order[end])] == 1) {
        deaths += 1.0;
        loglik += eta[order[end]] - shift;
      }
      ++end;
    }
    if (deaths > 0.0) loglik -= deaths * std::log(s0);
    for (std::size_t q = k; q < end; ++q) {
      group_s0[q] = s0;
      group_deaths[q] = deaths;
      group_start[q] = k;
    }
    k = end;
  }
  // Ascending pass: cumulative sum of d_i / S0_i over event times <= T_k.
  Eigen::VectorXd d_eta(m);
  double cumulative = 0.0;
  std::size_t q = mm;
  while (q > 0) {
    const std::size_t start = group_start[q - 1];
    if (group_deaths[start] > 0.0) cumulative += group_deaths[start] / group_s0[start];
    for (std::size_t r = start; r < q; ++r) {
      const auto i = order[r];
      const double delta = events[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
      d_eta[i] = -(delta - std::exp(eta[i] - shift) * cumulative) / static_cast<double>(m);
    }
    q = start;
  }

  NetworkLoss out;
  out.value = -loglik / static_cast<double>(m) +
              0.5 * decay * (weights.w1.squaredNorm() + weights.w2.squaredNorm());
  out.gradient.w2 = hidden.transpose() * d_eta + decay * weights.w2;
  const Eigen::MatrixXd d_pre =
      ((d_eta * weights.w2.transpose()).array() * (1.0 - hidden.array().square())).matrix();
  out.gradient.w1 = d_pre.transpose() * x + decay * weights.w1;
  out.gradient.b1 = d_pre.colwise().sum().transpose();
  return out;
}

// ---------------------------------------------------------------------------

SurvivalNeuralNetwork::SurvivalNeuralNetwork(Hyperparameters hyperparameters, TrainingInfo training,
                                             std::vector<std::string> feature_names,
                                             NetworkWeights weights, Eigen::VectorXd input_means,
                                             Eigen::VectorXd input_scales, double eta_offset,
                                             StepFunction baseline_cumhaz)
    : FittedLearner(LearnerKind::survival_neural_network, std::move(hyperparameters), training,
                    std::move(feature_names)),
      weights_(std::move(weights)),
      means_(std::move(input_means)),
      scales_(std::move(input_scales)),
      eta_offset_(eta_offset),
      baseline_(std::move(baseline_cumhaz)) {}

Eigen::VectorXd SurvivalNeuralNetwork::linear_predictor(const Eigen::MatrixXd& covariates) const {
  const Eigen::MatrixXd x =
      (covariates.rowwise() - means_.transpose()).array().rowwise() / scales_.transpose().array();
  return weights_.forward(x).array() - eta_offset_;
}

Eigen::VectorXd SurvivalNeuralNetwork::survival_at(const Eigen::MatrixXd& covariates, double t) const {
  const double h0 = baseline_(t);
  return (-h0 * linear_predictor(covariates).array().exp()).exp().matrix();
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json SurvivalNeuralNetwork::parameters_json() const {
  return {{"hidden", weights_.w1.rows()},
          {"weights", to_std(weights_.flatten())},
          {"input_means", to_std(means_)},
          {"input_scales", to_std(scales_)},
          {"eta_offset", eta_offset_},
          {"baseline_cumulative_hazard", baseline_.to_json()}};
}

std::shared_ptr<const SurvivalNeuralNetwork> SurvivalNeuralNetwork::from_parameters(
    Hyperparameters hyperparameters, TrainingInfo training, std::vector<std::string> feature_names,
    const nlohmann::json& parameters) {
  const auto hidden = parameters.at("hidden").get<Eigen::Index>();
  const auto p = static_cast<Eigen::Index>(feature_names.size());
  return std::make_shared<const SurvivalNeuralNetwork>(
      std::move(hyperparameters), training, std::move(feature_names),
      NetworkWeights::unflatten(to_eigen(parameters.at("weights").get<std::vector<double>>()), hidden, p),
      to_eigen(parameters.at("input_means").get<std::vector<double>>()),
      to_eigen(parameters.at("input_scales").get<std::vector<double>>()),
      parameters.at("eta_offset").get<double>(),
      StepFunction::from_json(parameters.at("baseline_cumulative_hazard")));
}

std::shared_ptr<const SurvivalNeuralNetwork> fit_survival_nn(const SurvivalDataset& data,
                                                             const LearnerSpec& raw,
                                                             std::uint64_t seed) {
  require_fittable(data, "survival_neural_network");
  const LearnerSpec spec = raw.validated();
  const auto hidden = static_cast<Eigen::Index>(spec.get("n_nodes"));
  const double decay = spec.get("decay");
  const auto batch_size = static_cast<std::size_t>(spec.get("batch_size"));
  const int epochs = static_cast<int>(spec.get("epochs"));
  const double learning_rate = spec.get("learning_rate");
  const bool zero_output = spec.get("init_output_zero") != 0.0;

  const auto n = static_cast<Eigen::Index>(data.size());
  const auto p = data.covariates().cols();
  const Eigen::VectorXd means = data.covariates().colwise().mean();
  Eigen::VectorXd scales(p);
  Eigen::MatrixXd x = data.covariates().rowwise() - means.transpose();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double sd = std::sqrt(x.col(j).squaredNorm() / static_cast<double>(n));
    scales[j] = sd > 0.0 ? sd : 1.0;
    x.col(j) /= scales[j];
  }

  Rng init_rng(derive_seed(seed, 0));
  NetworkWeights w;
  const double bound1 = std::sqrt(6.0 / static_cast<double>(p + hidden));
  const double bound2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  w.w1.resize(hidden, p);
  for (Eigen::Index c = 0; c < p; ++c) {
    for (Eigen::Index r = 0; r < hidden; ++r) w.w1(r, c) = bound1 * (2.0 * init_rng.uniform() - 1.0);
  }
  w.b1 = Eigen::VectorXd::Zero(hidden);
  w.w2.resize(hidden);
  for (Eigen::Index r = 0; r < hidden; ++r) {
    w.w2[r] = zero_output ? 0.0 : bound2 * (2.0 * init_rng.uniform() - 1.0);
  }

  // Adam state on the flattened parameter vector.
  Eigen::VectorXd theta = w.flatten();
  Eigen::VectorXd first = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd second = Eigen::VectorXd::Zero(theta.size());
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  // Mask of decayed entries (weights, not hidden biases).
  Eigen::VectorXd decayed = Eigen::VectorXd::Ones(theta.size());
  decayed.segment(hidden * p, hidden).setZero();
  const Eigen::ArrayXd shrink = 1.0 / (1.0 + learning_rate * decay * decayed.array());

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  long step = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 1, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const auto m = static_cast<Eigen::Index>(end - start);
      Eigen::MatrixXd xb(m, p);
      std::vector<double> tb(static_cast<std::size_t>(m));
      std::vector<int> eb(static_cast<std::size_t>(m));
      for (Eigen::Index r = 0; r < m; ++r) {
        const auto i = order[start + static_cast<std::size_t>(r)];
        xb.row(r) = x.row(static_cast<Eigen::Index>(i));
        tb[static_cast<std::size_t>(r)] = data.time(i);
        eb[static_cast<std::size_t>(r)] = data.event(i) ? 1 : 0;
      }
      const NetworkWeights current = NetworkWeights::unflatten(theta, hidden, p);
      const NetworkLoss loss = network_loss_and_gradient(current, xb, tb, eb, 0.0);
      const Eigen::VectorXd g = loss.gradient.flatten();
      if (!std::isfinite(loss.value) || !g.allFinite()) {
        throw NumericalError("divergence",
                             "survival network loss became non-finite; try a smaller learning_rate",
                             {{"epoch", epoch}, {"step", step}, {"learning_rate", learning_rate}});
      }
      ++step;
      first = beta1 * first + (1.0 - beta1) * g;
      second = beta2 * second + (1.0 - beta2) * g.cwiseProduct(g);
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      theta.array() -= learning_rate * (first.array() / c1) / ((second.array() / c2).sqrt() + eps);
      theta.array() *= shrink;
      if (!theta.allFinite()) {
        throw NumericalError("divergence",
                             "survival network weights became non-finite; try a smaller learning_rate",
                             {{"epoch", epoch}, {"step", step}});
      }
    }
  }

  w = NetworkWeights::unflatten(theta, hidden, p);
  const Eigen::VectorXd eta = w.forward(x);
  const double offset = eta.mean();
  const Eigen::VectorXd centered = eta.array() - offset;
  StepFunction baseline = breslow_cumulative_hazard(data.times(), data.events(), centered);
  TrainingInfo info{data.size(), data.num_covariates(), data.event_count(), seed};
  return std::make_shared<const SurvivalNeuralNetwork>(spec.hyperparameters, info,
                                                       data.covariate_names(), std::move(w), means,
                                                       scales, offset, std::move(baseline));
}

}  // namespace survsl
