#include "survsl/learners/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survsl/error.hpp"
#include "survsl/random.hpp"

namespace survsl {

const StepFunction& SurvivalTree::leaf_for(std::span<const double> x) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const Node& nd = nodes[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
  }
  return leaves[static_cast<std::size_t>(nodes[static_cast<std::size_t>(node)].leaf)];
}

nlohmann::json SurvivalTree::to_json() const {
  std::vector<int> feature, left, right, leaf;
  std::vector<double> threshold;
  for (const Node& n : nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    leaf.push_back(n.leaf);
  }
  nlohmann::json leaf_json = nlohmann::json::array();
  for (const auto& f : leaves) leaf_json.push_back(f.to_json());
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"leaf", leaf},           {"leaves", leaf_json}};
}

SurvivalTree SurvivalTree::from_json(const nlohmann::json& j) {
  SurvivalTree tree;
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto leaf = j.at("leaf").get<std::vector<int>>();
  for (std::size_t k = 0; k < feature.size(); ++k) {
    tree.nodes.push_back({feature[k], threshold[k], left[k], right[k], leaf[k]});
  }
  for (const auto& f : j.at("leaves")) tree.leaves.push_back(StepFunction::from_json(f));
  return tree;
}

std::uint64_t forest_tree_seed(std::uint64_t seed, std::size_t tree) {
  return derive_seed(seed, static_cast<std::uint64_t>(tree));
}

std::vector<std::size_t> forest_bootstrap(std::size_t n, std::uint64_t seed, std::size_t tree) {
  Rng rng(forest_tree_seed(seed, tree));
  return resample_indices(n, rng);
}

namespace {

class TreeGrower {
 public:
  TreeGrower(const SurvivalDataset& data, const ForestParameters& params, Rng& rng)
      : data_(data), x_(data.covariates()), params_(params), rng_(rng) {}

  SurvivalTree grow(std::vector<std::size_t> rows) {
    std::stable_sort(rows.begin(), rows.end(),
                     [&](std::size_t a, std::size_t b) { return data_.time(a) < data_.time(b); });
    SurvivalTree tree;
    build(std::move(rows), tree);
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double statistic = -1.0;
  };

  // Returns the index of the node created for `rows` (sorted by time).
  int build(std::vector<std::size_t> rows, SurvivalTree& tree) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const Split split = best_split(rows);
    if (split.feature < 0) {
      std::vector<double> times;
      std::vector<int> events;
      times.reserve(rows.size());
      events.reserve(rows.size());
      for (auto r : rows) {
        times.push_back(data_.time(r));
        events.push_back(data_.event(r) ? 1 : 0);
      }
      tree.nodes[static_cast<std::size_t>(index)].leaf = static_cast<int>(tree.leaves.size());
      tree.leaves.push_back(nelson_aalen(times, events));
      return index;
    }
    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (x_(static_cast<Eigen::Index>(r), split.feature) <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = build(std::move(left), tree);
    const int r = build(std::move(right), tree);
    auto& node = tree.nodes[static_cast<std::size_t>(index)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  Split best_split(const std::vector<std::size_t>& rows) {
    Split best;
    const auto size = rows.size();
    const auto nodesize = static_cast<std::size_t>(params_.nodesize);
    if (size < 2 * nodesize) return best;
    bool any_event = false;
    for (auto r : rows) any_event = any_event || data_.event(r);
    if (!any_event) return best;

    const auto p = static_cast<std::size_t>(x_.cols());
    std::vector<std::size_t> features(p);
    std::iota(features.begin(), features.end(), 0);
    const auto mtry = std::min(static_cast<std::size_t>(params_.mtry), p);
    // Partial Fisher-Yates: the first mtry entries are a uniform draw.
    for (std::size_t k = 0; k < mtry; ++k) std::swap(features[k], features[k + rng_.index(p - k)]);

    std::vector<double> values(size);
    std::vector<char> goes_left(size);
    for (std::size_t f = 0; f < mtry; ++f) {
      const auto j = static_cast<Eigen::Index>(features[f]);
      for (std::size_t k = 0; k < size; ++k) values[k] = x_(static_cast<Eigen::Index>(rows[k]), j);
      for (double c : candidate_thresholds(values)) {
        std::size_t n_left = 0;
        for (std::size_t k = 0; k < size; ++k) {
          goes_left[k] = values[k] <= c;
          n_left += goes_left[k];
        }
        if (n_left < nodesize || size - n_left < nodesize) continue;
        const double stat = logrank(rows, goes_left, n_left);
        if (stat > best.statistic) best = {static_cast<int>(j), c, stat};
      }
    }
    if (!(best.statistic > 0.0)) best.feature = -1;
    return best;
  }

  std::vector<double> candidate_thresholds(const std::vector<double>& values) {
    std::vector<double> out;
    if (params_.nsplit == 0) {
      out = values;
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      if (!out.empty()) out.pop_back();  // the maximum sends everything left
      return out;
    }
    const double max_value = *std::max_element(values.begin(), values.end());
    for (int s = 0; s < params_.nsplit; ++s) {
      const double c = values[rng_.index(values.size())];
      if (c < max_value) out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // Standardized two-sample log-rank statistic |O - E| / sqrt(V) for the
  // left group; rows are sorted by time.
  double logrank(const std::vector<std::size_t>& rows, const std::vector<char>& goes_left,
                 std::size_t n_left) const {
    double at_risk = static_cast<double>(rows.size());
    double at_risk_left = static_cast<double>(n_left);
    double observed_minus_expected = 0.0, variance = 0.0;
    std::size_t k = 0;
    while (k < rows.size()) {
      const double t = data_.time(rows[k]);
      double d = 0.0, d_left = 0.0, leaving = 0.0, leaving_left = 0.0;
      while (k < rows.size() && data_.time(rows[k]) == t) {
        const bool e = data_.event(rows[k]);
        d += e;
        d_left += e && goes_left[k];
        leaving += 1.0;
        leaving_left += goes_left[k];
        ++k;
      }
      if (d > 0.0) {
        const double share = at_risk_left / at_risk;
        observed_minus_expected += d_left - d * share;
        if (at_risk > 1.0) variance += d * share * (1.0 - share) * (at_risk - d) / (at_risk - 1.0);
      }
      at_risk -= leaving;
      at_risk_left -= leaving_left;
    }
    if (!(variance > 0.0)) return -1.0;
    return std::abs(observed_minus_expected) / std::sqrt(variance);
  }

  const SurvivalDataset& data_;
  const Eigen::MatrixXd& x_;
  const ForestParameters& params_;
  Rng& rng_;
};

ForestParameters parameters_from(const LearnerSpec& spec) {
  ForestParameters p;
  p.ntree = static_cast<int>(spec.get("ntree"));
  p.mtry = static_cast<int>(spec.get("mtry"));
  p.nodesize = static_cast<int>(spec.get("nodesize"));
  p.nsplit = static_cast<int>(spec.get("nsplit"));
  return p;
}

}  // namespace

SurvivalTree grow_survival_tree(const SurvivalDataset& data, const ForestParameters& params,
                                std::uint64_t seed, std::size_t tree) {
  Rng rng(forest_tree_seed(seed, tree));
  auto rows = resample_indices(data.size(), rng);
  TreeGrower grower(data, params, rng);
  return grower.grow(std::move(rows));
}

std::vector<SurvivalTree> grow_forest(const SurvivalDataset& data, const ForestParameters& params,
                                      std::uint64_t seed, const Execution& exec) {
  std::vector<SurvivalTree> trees(static_cast<std::size_t>(params.ntree));
  auto body = [&](std::size_t b) { trees[b] = grow_survival_tree(data, params, seed, b); };
  if (exec.is_parallel()) {
    parallel_for(trees.size(), exec, body);
  } else {
    serial_for(trees.size(), body);
  }
  return trees;
}

RandomSurvivalForest::RandomSurvivalForest(Hyperparameters hyperparameters, TrainingInfo training,
                                           std::vector<std::string> feature_names,
                                           std::vector<SurvivalTree> trees)
    : FittedLearner(LearnerKind::random_survival_forest, std::move(hyperparameters), training,
                    std::move(feature_names)),
      trees_(std::move(trees)) {}

Eigen::VectorXd RandomSurvivalForest::cumulative_hazard(const Eigen::MatrixXd& covariates,
                                                        double t) const {
  const auto n = covariates.rows();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
  std::vector<double> row(static_cast<std::size_t>(covariates.cols()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < covariates.cols(); ++j) row[static_cast<std::size_t>(j)] = covariates(i, j);
    double total = 0.0;
    for (const auto& tree : trees_) total += tree.leaf_for(row)(t);
    h[i] = total / static_cast<double>(trees_.size());
  }
  return h;
}

Eigen::VectorXd RandomSurvivalForest::survival_at(const Eigen::MatrixXd& covariates, double t) const {
  return (-cumulative_hazard(covariates, t).array()).exp().matrix();
}

nlohmann::json RandomSurvivalForest::parameters_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : trees_) trees.push_back(tree.to_json());
  return {{"trees", trees}};
}

std::shared_ptr<const RandomSurvivalForest> RandomSurvivalForest::from_parameters(
    Hyperparameters hyperparameters, TrainingInfo training, std::vector<std::string> feature_names,
    const nlohmann::json& parameters) {
  std::vector<SurvivalTree> trees;
  for (const auto& t : parameters.at("trees")) trees.push_back(SurvivalTree::from_json(t));
  return std::make_shared<const RandomSurvivalForest>(std::move(hyperparameters), training,
                                                      std::move(feature_names), std::move(trees));
}

std::shared_ptr<const RandomSurvivalForest> fit_random_survival_forest(const SurvivalDataset& data,
                                                                       const LearnerSpec& raw,
                                                                       std::uint64_t seed,
                                                                       const Execution& exec) {
  require_fittable(data, "random_survival_forest");
  const LearnerSpec spec = raw.validated();
  const ForestParameters params = parameters_from(spec);
  if (static_cast<std::size_t>(params.mtry) > data.num_covariates()) {
    throw InputError("invalid_hyperparameter",
                     "mtry = " + std::to_string(params.mtry) + " exceeds the number of covariates (" +
                         std::to_string(data.num_covariates()) + ")",
                     {{"mtry", params.mtry}, {"p", data.num_covariates()}});
  }
  auto trees = grow_forest(data, params, seed, exec);
  TrainingInfo info{data.size(), data.num_covariates(), data.event_count(), seed};
  return std::make_shared<const RandomSurvivalForest>(spec.hyperparameters, info,
                                                      data.covariate_names(), std::move(trees));
}

}  // namespace survsl
