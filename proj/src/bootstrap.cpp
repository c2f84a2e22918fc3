#include "survsl/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "survsl/error.hpp"
#include "survsl/numeric.hpp"
#include "survsl/random.hpp"

namespace survsl {

std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed, std::size_t iteration) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(iteration)));
  return resample_indices(n, rng);
}

Eigen::MatrixXd bootstrap_replicates(std::size_t n, std::size_t outputs, const ReplicateFn& replicate,
                                     const BootstrapConfig& config) {
  if (config.iterations < 1) throw InputError("invalid_bootstrap", "bootstrap needs at least one iteration");
  const auto b_count = static_cast<std::size_t>(config.iterations);
  Eigen::MatrixXd values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(b_count),
                                                     static_cast<Eigen::Index>(outputs),
                                                     std::numeric_limits<double>::quiet_NaN());
  auto body = [&](std::size_t b) {
    const auto rows = bootstrap_rows(n, config.seed, b);
    try {
      const auto out = replicate(rows, b);
      if (out.size() != outputs) {
        throw InputError("replicate_size", "bootstrap replicate returned the wrong number of outputs");
      }
      for (std::size_t m = 0; m < outputs; ++m) {
        values(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(m)) = out[m];
      }
    } catch (const InputError& e) {
      if (e.code() == "replicate_size") throw;
    } catch (const Error&) {
      // Row stays undefined.
    }
  };
  if (config.exec.is_parallel()) {
    parallel_for(b_count, config.exec, body);
  } else {
    serial_for(b_count, body);
  }
  return values;
}

PercentileInterval percentile_interval(std::span<const double> values, double level) {
  std::vector<double> defined;
  for (double v : values) {
    if (!std::isnan(v)) defined.push_back(v);
  }
  PercentileInterval out;
  out.defined = defined.size();
  out.undefined = values.size() - defined.size();
  if (defined.empty()) {
    out.lower = out.upper = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  std::sort(defined.begin(), defined.end());
  const double tail = (1.0 - level) / 2.0;
  out.lower = quantile_sorted(defined, tail);
  out.upper = quantile_sorted(defined, 1.0 - tail);
  return out;
}

BootstrapEstimate bootstrap_ci(const Metric& metric, const SurvivalDataset& data,
                               const RiskProducer& producer, const BootstrapConfig& config,
                               BootstrapScheme scheme) {
  const std::vector<double> apparent = producer(data, data);
  BootstrapEstimate out;
  out.point = metric(data, apparent);

  ReplicateFn replicate;
  if (scheme == BootstrapScheme::resample_evaluation) {
    replicate = [&](std::span<const std::size_t> rows, std::size_t) {
      std::vector<double> risk(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k) risk[k] = apparent[rows[k]];
      return std::vector<double>{metric(data.subset(rows), risk)};
    };
  } else {
    replicate = [&](std::span<const std::size_t> rows, std::size_t) {
      return std::vector<double>{metric(data, producer(data.subset(rows), data))};
    };
  }
  const Eigen::MatrixXd values = bootstrap_replicates(data.size(), 1, replicate, config);
  const auto interval = percentile_interval(std::span<const double>(values.data(), static_cast<std::size_t>(values.rows())));
  out.undefined = interval.undefined;
  if (static_cast<double>(interval.undefined) >
      config.max_undefined_fraction * static_cast<double>(config.iterations)) {
    throw NumericalError("bootstrap_undefined",
                         "metric was undefined on " + std::to_string(interval.undefined) + " of " +
                             std::to_string(config.iterations) + " bootstrap resamples",
                         {{"undefined", interval.undefined}, {"iterations", config.iterations}});
  }
  out.lower = interval.lower;
  out.upper = interval.upper;
  return out;
}

}  // namespace survsl
