#include "survsl/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "survsl/error.hpp"
#include "survsl/metrics.hpp"
#include "survsl/random.hpp"

namespace survsl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

double number_from(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }

std::string fixed(double v, int digits = 3) {
  if (!std::isfinite(v)) return "NA";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, v);
  return buffer;
}

const char* const kMetricNames[kScalarMetrics] = {
    "tauroc", "mean_calibration", "weak_calibration_slope", "weak_calibration_intercept", "ici", "brier"};

Estimate* metric_slot(MetricReport& report, std::size_t m) {
  switch (m) {
    case 0: return &report.tauroc;
    case 1: return &report.mean_calibration;
    case 2: return &report.weak_calibration_slope;
    case 3: return &report.weak_calibration_intercept;
    case 4: return &report.ici;
    default: return &report.brier;
  }
}

const Estimate& metric_slot(const MetricReport& report, std::size_t m) {
  return *metric_slot(const_cast<MetricReport&>(report), m);
}

std::size_t events_by(const SurvivalDataset& data, double tau) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) count += data.event(i) && data.time(i) <= tau;
  return count;
}

// Fills point estimates, intervals and the curve from the point metrics and
// the replicate matrix.
void summarize(MetricReport& report, const std::vector<double>& point, const std::vector<double>& grid,
               const Eigen::MatrixXd& replicates, const BootstrapConfig& config) {
  const auto iterations = static_cast<std::size_t>(replicates.rows());
  nlohmann::json failures = nlohmann::json::object();
  for (std::size_t m = 0; m < kScalarMetrics; ++m) {
    std::vector<double> column(iterations);
    for (std::size_t b = 0; b < iterations; ++b) column[b] = replicates(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(m));
    const auto interval = percentile_interval(column);
    if (static_cast<double>(interval.undefined) > config.max_undefined_fraction * static_cast<double>(iterations)) {
      failures[kMetricNames[m]] = interval.undefined;
    }
    *metric_slot(report, m) = Estimate::from_interval(point[m], interval);
  }
  if (!failures.empty()) {
    throw NumericalError("bootstrap_undefined",
                         "metrics were undefined on more than " +
                             fixed(100.0 * config.max_undefined_fraction, 0) + "% of " +
                             std::to_string(iterations) + " bootstrap resamples",
                         {{"undefined", failures}, {"iterations", iterations}});
  }
  report.calibration_curve.clear();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> column(iterations);
    for (std::size_t b = 0; b < iterations; ++b) {
      column[b] = replicates(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(kScalarMetrics + g));
    }
    const auto interval = percentile_interval(column);
    report.calibration_curve.push_back({grid[g], point[kScalarMetrics + g], interval.lower, interval.upper});
  }
}

}  // namespace

Estimate Estimate::from_interval(double point, const PercentileInterval& interval) {
  Estimate e;
  e.point = point;
  e.percentile_lower = interval.lower;
  e.percentile_upper = interval.upper;
  e.lower = std::isnan(interval.lower) ? point : std::min(interval.lower, point);
  e.upper = std::isnan(interval.upper) ? point : std::max(interval.upper, point);
  e.undefined = interval.undefined;
  return e;
}

nlohmann::json Estimate::to_json() const {
  return {{"point", number(point)},
          {"lower", number(lower)},
          {"upper", number(upper)},
          {"percentile_lower", number(percentile_lower)},
          {"percentile_upper", number(percentile_upper)},
          {"undefined_resamples", undefined}};
}

Estimate Estimate::from_json(const nlohmann::json& j) {
  Estimate e;
  e.point = number_from(j.at("point"));
  e.lower = number_from(j.at("lower"));
  e.upper = number_from(j.at("upper"));
  e.percentile_lower = number_from(j.at("percentile_lower"));
  e.percentile_upper = number_from(j.at("percentile_upper"));
  e.undefined = j.value("undefined_resamples", std::size_t{0});
  return e;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json metrics = nlohmann::json::object();
  for (std::size_t m = 0; m < kScalarMetrics; ++m) metrics[kMetricNames[m]] = metric_slot(*this, m).to_json();
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& c : calibration_curve) {
    curve.push_back({{"predicted", number(c.predicted)},
                     {"observed", number(c.observed)},
                     {"lower", number(c.lower)},
                     {"upper", number(c.upper)}});
  }
  return {{"format_version", kFormatVersion},
          {"label", label},
          {"validation", validation},
          {"censoring", censoring},
          {"tau", tau},
          {"n", n},
          {"events_by_tau", events_by_tau},
          {"bootstrap", {{"iterations", bootstrap_iterations},
                         {"seed", bootstrap_seed},
                         {"interval", "percentile 2.5%/97.5%"}}},
          {"mean_calibration_direction",
           mean_calibration_reciprocal ? "expected/observed" : "observed/expected"},
          {"metrics", metrics},
          {"calibration_curve", curve},
          {"notes", notes}};
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw InputError("unsupported_format", "unsupported report format_version");
    }
    MetricReport r;
    r.label = j.at("label").get<std::string>();
    r.validation = j.at("validation").get<std::string>();
    r.censoring = j.value("censoring", "");
    r.tau = j.at("tau").get<double>();
    r.n = j.at("n").get<std::size_t>();
    r.events_by_tau = j.value("events_by_tau", std::size_t{0});
    r.bootstrap_iterations = j.at("bootstrap").at("iterations").get<int>();
    r.bootstrap_seed = j.at("bootstrap").at("seed").get<std::uint64_t>();
    r.mean_calibration_reciprocal = j.value("mean_calibration_direction", "") == "expected/observed";
    for (std::size_t m = 0; m < kScalarMetrics; ++m) {
      *metric_slot(r, m) = Estimate::from_json(j.at("metrics").at(kMetricNames[m]));
    }
    for (const auto& c : j.at("calibration_curve")) {
      r.calibration_curve.push_back({number_from(c.at("predicted")), number_from(c.at("observed")),
                                     number_from(c.at("lower")), number_from(c.at("upper"))});
    }
    r.notes = j.value("notes", nlohmann::json::object());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed_report", std::string("malformed metric report: ") + e.what());
  }
}

MetricReport MetricReport::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("missing_file", "cannot open report " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed_report", "report " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void MetricReport::write_curve_csv(std::ostream& out) const {
  auto cell = [](double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); };
  out << "predicted,observed,lower,upper\n";
  for (const auto& c : calibration_curve) {
    out << cell(c.predicted) << ',' << cell(c.observed) << ',' << cell(c.lower) << ',' << cell(c.upper) << '\n';
  }
}

// ---------------------------------------------------------------------------

std::vector<double> compute_metrics(std::span<const double> risk, const SurvivalDataset& cohort,
                                    const CensoringModel& censoring, const ValidationOptions& options,
                                    std::span<const double> grid, bool strict) {
  std::vector<double> out(kScalarMetrics + grid.size(), kNaN);
  auto guarded = [&](auto&& fn) {
    if (strict) {
      fn();
      return;
    }
    try {
      fn();
    } catch (const Error&) {
    }
  };
  const double tau = options.tau;
  guarded([&] { out[0] = tauroc(risk, cohort, tau, censoring, options.ipcw); });
  guarded([&] {
    out[1] = mean_calibration(risk, cohort, tau, options.reciprocal_mean_calibration).ratio;
  });
  guarded([&] {
    const auto weak = weak_calibration(risk, cohort, tau, censoring, options.ipcw);
    out[2] = weak.slope;
    out[3] = weak.intercept;
  });
  guarded([&] {
    const auto curve = calibration_curve(risk, cohort, tau, censoring, options.knots, options.ipcw,
                                         options.grid_points, grid);
    out[4] = curve.ici;
    std::copy(curve.observed.begin(), curve.observed.end(), out.begin() + kScalarMetrics);
  });
  guarded([&] { out[5] = brier_metric(risk, cohort, tau, censoring, options.ipcw); });
  return out;
}

SurvivalDataset align_covariates(const SurvivalDataset& cohort,
                                 const std::vector<std::string>& feature_names) {
  return cohort.select_covariates(cohort.column_indices(feature_names));
}

MetricReport temporal_validate(const SurvivalPredictor& model, const SurvivalDataset& cohort,
                               const ValidationOptions& options,
                               const std::optional<CensoringModel>& carried_censoring,
                               const std::string& label) {
  const SurvivalDataset aligned = align_covariates(cohort, model.feature_names());
  const Eigen::VectorXd r = model.predict_risk(aligned.covariates(), options.tau);
  const std::vector<double> risk(r.data(), r.data() + r.size());
  const CensoringModel censoring = carried_censoring ? *carried_censoring : fit_censoring_km(aligned);

  const auto point_curve = calibration_curve(risk, aligned, options.tau, censoring, options.knots,
                                             options.ipcw, options.grid_points);
  const std::vector<double>& grid = point_curve.predicted;
  const auto point = compute_metrics(risk, aligned, censoring, options, grid, true);

  const ReplicateFn replicate = [&](std::span<const std::size_t> rows, std::size_t) {
    const SurvivalDataset sample = aligned.subset(rows);
    std::vector<double> sample_risk(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) sample_risk[k] = risk[rows[k]];
    const CensoringModel sample_censoring = carried_censoring ? *carried_censoring : fit_censoring_km(sample);
    return compute_metrics(sample_risk, sample, sample_censoring, options, grid, false);
  };
  const Eigen::MatrixXd replicates =
      bootstrap_replicates(aligned.size(), kScalarMetrics + grid.size(), replicate, options.bootstrap);

  MetricReport report;
  report.label = label;
  report.validation = "temporal";
  report.censoring = carried_censoring ? "carried_from_training" : "refit_on_cohort";
  report.tau = options.tau;
  report.n = aligned.size();
  report.events_by_tau = events_by(aligned, options.tau);
  report.bootstrap_iterations = options.bootstrap.iterations;
  report.bootstrap_seed = options.bootstrap.seed;
  report.mean_calibration_reciprocal = options.reciprocal_mean_calibration;
  summarize(report, point, grid, replicates, options.bootstrap);
  report.notes["bootstrap_scheme"] = "resample_evaluation_cohort";
  return report;
}

std::string_view to_string(InternalScheme scheme) {
  return scheme == InternalScheme::refit_full ? "refit_full" : "refit_candidates";
}

InternalScheme internal_scheme_from_string(std::string_view name) {
  if (name == "refit_full") return InternalScheme::refit_full;
  if (name == "refit_candidates") return InternalScheme::refit_candidates;
  throw InputError("unknown_scheme", "unknown internal validation scheme '" + std::string(name) +
                                         "' (expected refit_candidates or refit_full)");
}

MetricReport internal_validate(const SuperLearnerModel& model, const SurvivalDataset& data,
                               const SuperLearnerConfig& config, const ValidationOptions& options,
                               InternalScheme scheme, const std::string& label) {
  const SurvivalDataset aligned = align_covariates(data, model.feature_names());
  const Eigen::VectorXd r = model.predict_risk_at(aligned.covariates(), options.tau);
  const std::vector<double> risk(r.data(), r.data() + r.size());
  const CensoringModel censoring = fit_censoring_km(aligned);

  const auto point_curve = calibration_curve(risk, aligned, options.tau, censoring, options.knots,
                                             options.ipcw, options.grid_points);
  const std::vector<double>& grid = point_curve.predicted;
  const auto point = compute_metrics(risk, aligned, censoring, options, grid, true);

  // Candidates see only the covariates they were trained on.
  const auto& candidate_names = model.candidates().front()->feature_names();
  const SurvivalDataset candidate_view = align_covariates(aligned, candidate_names);

  const ReplicateFn replicate = [&](std::span<const std::size_t> rows, std::size_t b) {
    std::vector<double> replicate_risk;
    if (scheme == InternalScheme::refit_candidates) {
      const SurvivalDataset sample = candidate_view.subset(rows);
      const auto& weights = model.weights();
      Eigen::MatrixXd risks = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(aligned.size()), weights.size());
      for (Eigen::Index k = 0; k < weights.size(); ++k) {
        if (weights[k] == 0.0) continue;
        const auto refit = fit_learner(model.specs()[static_cast<std::size_t>(k)], sample,
                                       derive_seed(derive_seed(config.seed, 6, b), static_cast<std::uint64_t>(k)));
        risks.col(k) = refit->predict_risk(candidate_view.covariates(), options.tau);
      }
      const Eigen::VectorXd combined = combine_risks(risks, weights);
      replicate_risk.assign(combined.data(), combined.data() + combined.size());
    } else {
      SuperLearnerConfig cfg = config;
      cfg.seed = derive_seed(config.seed, 7, b);
      cfg.exec = Execution::serial();
      const auto refit = fit_super_learner(aligned.subset(rows), cfg);
      const Eigen::VectorXd combined = refit.predict_risk_at(aligned.covariates(), options.tau);
      replicate_risk.assign(combined.data(), combined.data() + combined.size());
    }
    return compute_metrics(replicate_risk, aligned, censoring, options, grid, false);
  };
  const Eigen::MatrixXd replicates =
      bootstrap_replicates(aligned.size(), kScalarMetrics + grid.size(), replicate, options.bootstrap);

  MetricReport report;
  report.label = label;
  report.validation = "internal_" + std::string(to_string(scheme));
  report.censoring = "refit_on_cohort";
  report.tau = options.tau;
  report.n = aligned.size();
  report.events_by_tau = events_by(aligned, options.tau);
  report.bootstrap_iterations = options.bootstrap.iterations;
  report.bootstrap_seed = options.bootstrap.seed;
  report.mean_calibration_reciprocal = options.reciprocal_mean_calibration;
  summarize(report, point, grid, replicates, options.bootstrap);
  report.notes["point_estimates"] = "apparent (full-data model on its training data)";
  report.notes["bootstrap_scheme"] = "refit on resample, evaluate on original data";
  return report;
}

// ---------------------------------------------------------------------------

namespace {

struct RowSpec {
  const char* title;
  std::size_t metric;
};

const RowSpec kRows[] = {{"tAUROC", 0},
                         {"Mean calibration", 1},
                         {"Weak calibration (slope)", 2},
                         {"Weak calibration (intercept)", 3},
                         {"ICI", 4},
                         {"Brier score", 5}};

std::string cell(const Estimate& e) {
  return fixed(e.point) + " [" + fixed(e.lower) + ", " + fixed(e.upper) + "]";
}

}  // namespace

std::string render_report_table(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw InputError("no_reports", "nothing to render");
  std::ostringstream out;
  bool same_tau = true;
  for (const auto& r : reports) same_tau = same_tau && r.tau == reports.front().tau;
  if (!same_tau) {
    out << "> **Warning:** the reports use different horizons (";
    for (std::size_t c = 0; c < reports.size(); ++c) {
      out << (c ? ", " : "") << reports[c].label << ": tau = " << format_double(reports[c].tau);
    }
    out << "); their metrics are not directly comparable.\n\n";
  }
  out << "| Metric |";
  for (const auto& r : reports) out << ' ' << r.label << " |";
  out << "\n|---|";
  for (std::size_t c = 0; c < reports.size(); ++c) out << "---|";
  out << "\n| Horizon (years) |";
  for (const auto& r : reports) out << ' ' << format_double(r.tau) << " |";
  out << "\n| Subjects (events by horizon) |";
  for (const auto& r : reports) out << ' ' << r.n << " (" << r.events_by_tau << ") |";
  out << '\n';
  for (const auto& row : kRows) {
    out << "| " << row.title;
    if (row.metric == 1) {
      out << (reports.front().mean_calibration_reciprocal ? " (E/O)" : " (O/E)");
    }
    out << " |";
    for (const auto& r : reports) out << ' ' << cell(metric_slot(r, row.metric)) << " |";
    out << '\n';
  }
  out << "\nIntervals: 95% percentile bootstrap (";
  for (std::size_t c = 0; c < reports.size(); ++c) {
    out << (c ? "; " : "") << reports[c].label << ": " << reports[c].bootstrap_iterations
        << " resamples, " << reports[c].validation;
  }
  out << ").\n";
  return out.str();
}

std::string render_drift_summary(const std::optional<MetricReport>& development,
                                 const MetricReport& validation, double threshold) {
  std::ostringstream out;
  out << "# Drift summary\n\n";
  std::vector<MetricReport> reports;
  if (development) reports.push_back(*development);
  reports.push_back(validation);
  out << render_report_table(reports) << '\n';

  const double mc = validation.mean_calibration.point;
  const double departure = std::abs(mc - 1.0);
  out << "## Flags\n\n";
  out << "- mean_calibration_departure: " << fixed(departure) << " (validation "
      << (validation.mean_calibration_reciprocal ? "E/O" : "O/E") << " = " << fixed(mc)
      << ", threshold " << fixed(threshold, 2) << "): "
      << (departure > threshold ? "FLAGGED, calibration drift" : "within threshold") << '\n';
  if (development) {
    const double brier_change = validation.brier.point - development->brier.point;
    const double auc_change = validation.tauroc.point - development->tauroc.point;
    out << "- brier_change: " << fixed(brier_change, 4) << '\n';
    out << "- tauroc_change: " << fixed(auc_change, 4) << '\n';
    out << "- slope_change: "
        << fixed(validation.weak_calibration_slope.point - development->weak_calibration_slope.point, 4)
        << '\n';
  } else {
    out << "- development report not available; changes not computed\n";
  }
  return out.str();
}

}  // namespace survsl
