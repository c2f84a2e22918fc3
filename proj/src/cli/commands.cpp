#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "survsl/cli.hpp"
#include "survsl/error.hpp"
#include "survsl/random.hpp"

namespace survsl::cli {

namespace {

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw InputError("unwritable_output", "cannot create output directory " + dir.string(),
                     {{"path", dir.string()}});
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("unwritable_output", "cannot write " + path.string(), {{"path", path.string()}});
  out << text;
  out.flush();
  if (!out) throw InputError("unwritable_output", "failed writing " + path.string(), {{"path", path.string()}});
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const std::filesystem::path& path, const char* code) {
  std::ifstream in(path);
  if (!in) throw InputError("missing_file", "cannot open " + path.string(), {{"path", path.string()}});
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(code, path.string() + " is not valid JSON: " + e.what(), {{"path", path.string()}});
  }
}

SurvivalDataset load_data(const RunConfig& config, std::ostream& log) {
  auto loaded = load_csv(*config.data, config.schema);
  log << "read " << loaded.data.size() << " rows from " << config.data->string();
  if (loaded.dropped_rows > 0) log << " (" << loaded.dropped_rows << " incomplete rows dropped)";
  log << "\n";
  if (config.censor_at_horizon) return censor_at(loaded.data, config.tau);
  return std::move(loaded.data);
}

std::string curve_csv(const MetricReport& report) {
  std::ostringstream out;
  report.write_curve_csv(out);
  return out.str();
}

// ---------------------------------------------------------------------------
// Cohort comparison for the simulation summary.

struct CohortStats {
  double n = 0.0;
  std::vector<double> means;
  std::vector<double> variances;
  double event_fraction = 0.0;     // events observed by tau
  double censored_fraction = 0.0;  // censored before tau
};

CohortStats cohort_stats(const SurvivalDataset& data, double tau) {
  CohortStats s;
  s.n = static_cast<double>(data.size());
  const auto& x = data.covariates();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    const double var = data.size() > 1 ? (x.col(j).array() - mean).square().sum() / (s.n - 1.0) : 0.0;
    s.means.push_back(mean);
    s.variances.push_back(var);
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.time(i) <= tau && data.event(i)) s.event_fraction += 1.0;
    if (data.time(i) < tau && !data.event(i)) s.censored_fraction += 1.0;
  }
  s.event_fraction /= s.n;
  s.censored_fraction /= s.n;
  return s;
}

double z_statistic(double difference, double variance) {
  if (variance > 0.0) return difference / std::sqrt(variance);
  return difference == 0.0 ? 0.0 : std::copysign(INFINITY, difference);
}

double proportion_z(double p1, double n1, double p2, double n2) {
  const double pooled = (p1 * n1 + p2 * n2) / (n1 + n2);
  return z_statistic(p2 - p1, pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
}

nlohmann::json cohort_summary(const SurvivalDataset& data, const CohortStats& s) {
  nlohmann::json means = nlohmann::json::object();
  for (std::size_t j = 0; j < s.means.size(); ++j) means[data.covariate_names()[j]] = s.means[j];
  return {{"n", data.size()},
          {"events", data.event_count()},
          {"event_fraction_by_tau", s.event_fraction},
          {"censored_before_tau_fraction", s.censored_fraction},
          {"covariate_means", means}};
}

std::string join_weights(const SuperLearnerModel& model) {
  std::ostringstream out;
  for (std::size_t k = 0; k < model.specs().size(); ++k) {
    out << (k ? ", " : "") << model.specs()[k].label() << " " << format_double(model.weights()[static_cast<Eigen::Index>(k)]);
  }
  return out.str();
}

}  // namespace

// ---------------------------------------------------------------------------

void cmd_simulate(const RunConfig& config, std::ostream& log) {
  ensure_directory(config.out);
  const auto& sim = config.simulation;
  const DriftSpec drift = sim.drift ? *sim.drift : DriftSpec::kidney_transplant_decade(config.seed);
  DriftSpec dev_spec = drift;
  DriftSpec val_spec = drift;
  dev_spec.seed = derive_seed(config.seed, 1);
  val_spec.seed = derive_seed(config.seed, 2);

  const auto dev = generate_cohort(sim.n_development, Era::development, dev_spec, sim.generator);
  const auto val = generate_cohort(sim.n_validation, Era::shifted, val_spec, sim.generator);

  auto true_risk_csv = [&](const SurvivalDataset& data, Era era, const DriftSpec& spec) {
    std::ostringstream out;
    out << "row,true_risk\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Eigen::VectorXd row = data.covariates().row(static_cast<Eigen::Index>(i)).transpose();
      out << i << ',' << format_double(generator_risk(sim.generator, era, spec, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), config.tau)) << '\n';
    }
    return out.str();
  };
  auto csv = [](const SurvivalDataset& data) {
    std::ostringstream out;
    write_csv(out, data);
    return out.str();
  };
  write_text(config.out / "development.csv", csv(dev.data));
  write_text(config.out / "validation.csv", csv(val.data));
  write_text(config.out / "development_true_risk.csv", true_risk_csv(dev.data, Era::development, dev_spec));
  write_text(config.out / "validation_true_risk.csv", true_risk_csv(val.data, Era::shifted, val_spec));

  CsvSchema schema;
  schema.covariate_columns = dev.data.covariate_names();
  schema.horizon_hint = config.tau;
  write_json(config.out / "schema.json", schema.to_json());

  const auto a = cohort_stats(dev.data, config.tau);
  const auto b = cohort_stats(val.data, config.tau);
  nlohmann::json comparison = nlohmann::json::array();
  double max_abs_z = 0.0;
  auto add = [&](const std::string& name, double d, double v, double z) {
    comparison.push_back({{"statistic", name}, {"development", d}, {"validation", v},
                          {"z", std::isfinite(z) ? nlohmann::json(z) : nlohmann::json("inf")}});
    max_abs_z = std::max(max_abs_z, std::abs(z));
  };
  for (std::size_t j = 0; j < a.means.size(); ++j) {
    add("mean " + dev.data.covariate_names()[j], a.means[j], b.means[j],
        z_statistic(b.means[j] - a.means[j], a.variances[j] / a.n + b.variances[j] / b.n));
  }
  add("event_fraction_by_tau", a.event_fraction, b.event_fraction,
      proportion_z(a.event_fraction, a.n, b.event_fraction, b.n));
  add("censored_before_tau_fraction", a.censored_fraction, b.censored_fraction,
      proportion_z(a.censored_fraction, a.n, b.censored_fraction, b.n));
  const bool no_drift = max_abs_z <= sim.no_drift_z;

  nlohmann::json summary = {
      {"seed", config.seed},
      {"tau", config.tau},
      {"generator", sim.generator.to_json()},
      {"drift", drift.to_json()},
      {"cohorts", {{"development", cohort_summary(dev.data, a)}, {"validation", cohort_summary(val.data, b)}}},
      {"comparison", comparison},
      {"max_abs_z", std::isfinite(max_abs_z) ? nlohmann::json(max_abs_z) : nlohmann::json("inf")},
      {"z_threshold", sim.no_drift_z},
      {"flag", no_drift ? "no-drift" : "drift"}};
  summary["drift"]["seed"] = config.seed;
  write_json(config.out / "simulation_summary.json", summary);

  log << "wrote development (" << dev.data.size() << " rows) and validation (" << val.data.size()
      << " rows) cohorts to " << config.out.string() << "; cohort comparison: "
      << (no_drift ? "no-drift" : "drift") << "\n";
}

void cmd_fit(const RunConfig& config, std::ostream& log) {
  ensure_directory(config.out);
  const SurvivalDataset data = load_data(config, log);
  const SuperLearnerConfig sl_config = config.super_learner();
  const SuperLearnerModel model = fit_super_learner(data, sl_config);
  write_json(config.out / "model.json", model.to_json());
  log << "super learner weights: " << join_weights(model) << "\n";
  for (const auto& w : model.warnings()) log << "warning: " << w.learner << " " << w.code << ": " << w.message << "\n";

  MetricReport report =
      internal_validate(model, data, sl_config, config.validation(), config.internal_scheme, "development");
  report.notes["loss"] = to_string(config.loss);
  write_json(config.out / "report.json", report.to_json());
  write_text(config.out / "calibration_curve.csv", curve_csv(report));
  log << render_report_table({report});
}

void cmd_validate(const RunConfig& config, std::ostream& log) {
  const auto model = SuperLearnerModel::from_json(read_json(*config.model, "malformed_model"));
  std::optional<MetricReport> development;
  std::filesystem::path dev_path =
      config.dev_report ? *config.dev_report : config.model->parent_path() / "report.json";
  if (config.dev_report || std::filesystem::exists(dev_path)) development = MetricReport::load(dev_path);

  RunConfig effective = config;
  if (!config.tau_explicit) effective.tau = model.tau();
  const SurvivalDataset data = load_data(effective, log);
  std::optional<CensoringModel> carried;
  if (config.carry_censoring) carried = model.training_censoring();
  const MetricReport report = temporal_validate(model, data, effective.validation(), carried, "validation");

  ensure_directory(config.out);
  write_json(config.out / "report.json", report.to_json());
  write_text(config.out / "calibration_curve.csv", curve_csv(report));
  const std::string drift = render_drift_summary(development, report, config.drift_threshold);
  write_text(config.out / "drift_summary.md", drift);
  log << drift;
}

void cmd_report(const RunConfig& config, std::ostream& out) {
  std::vector<MetricReport> reports;
  for (const auto& path : config.reports) reports.push_back(MetricReport::load(path));
  out << render_report_table(reports);
}

void cmd_diagnostics(const RunConfig& config, std::ostream& log) {
  ensure_directory(config.out);
  const SurvivalDataset data = load_data(config, log);
  const CensoringModel censoring = fit_censoring_km(data);
  const IpcwWeights weights = ipcw_weights(censoring, data, config.tau, config.ipcw);
  std::ostringstream out;
  out << "row,time,event,status,weight\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << i << ',' << format_double(data.time(i)) << ',' << (data.event(i) ? 1 : 0) << ','
        << static_cast<int>(weights.status[i]) << ',' << format_double(weights.weights[i]) << '\n';
  }
  write_text(config.out / "ipcw_weights.csv", out.str());
  log << "wrote IPCW weights at tau = " << format_double(config.tau) << " (" << weights.floored_count
      << " floored at " << format_double(weights.floor) << ")\n";

  if (config.model) {
    const auto model = SuperLearnerModel::from_json(read_json(*config.model, "malformed_model"));
    std::ostringstream w;
    w << "learner,weight,cv_loss\n";
    const auto& cv = model.cv_report();
    for (std::size_t k = 0; k < model.specs().size(); ++k) {
      w << model.specs()[k].label() << ',' << format_double(model.weights()[static_cast<Eigen::Index>(k)]) << ',';
      for (std::size_t c = 0; c < cv.learners.size(); ++c) {
        if (cv.learners[c] == model.specs()[k].label()) w << format_double(cv.learner_losses[c]);
      }
      w << '\n';
    }
    write_text(config.out / "learner_weights.csv", w.str());
  }
}

// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Super learner survival prediction with temporal validation"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir, data_path, model_path, schema_path, dev_report, loss, scheme, learners;
  double horizon = 0.0, drift_threshold = 0.0;
  int folds = 0, inner_folds = 0, boot = 0, workers = 0;
  std::size_t n = 0, n_validation = 0;
  bool screen = false, screen_within_folds = false, paper_scale = false, reciprocal = false,
       carry = false, no_drift = false, censor_at_horizon = false;
  std::vector<std::string> report_paths;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "root seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--horizon", horizon, "prediction horizon tau");
    sub->add_option("--workers", workers, "worker threads (1 runs the serial path)");
    sub->add_option("--schema", schema_path, "CSV schema sidecar (JSON)");
    sub->add_option("--data", data_path, "cohort CSV");
    sub->add_option("--boot", boot, "bootstrap iterations");
    sub->add_flag("--paper-scale", paper_scale, "2000 bootstrap iterations unless --boot is given");
    sub->add_option("--loss", loss, "brier, nbll or auroct")->check(CLI::IsMember({"brier", "nbll", "auroct"}));
    sub->add_option("--folds", folds, "cross-validation folds");
    sub->add_option("--inner-folds", inner_folds, "inner folds for hyperparameter tuning");
    sub->add_flag("--screen", screen, "elastic-net covariate screening");
    sub->add_flag("--screen-within-folds", screen_within_folds, "screen inside every training fold");
    sub->add_option("--learners", learners, "comma-separated learner kinds");
    sub->add_flag("--reciprocal-mc", reciprocal, "report mean calibration as expected/observed");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "write development and shifted synthetic cohorts");
  CLI::App* fit = app.add_subcommand("fit", "fit the super learner and validate it internally");
  CLI::App* validate = app.add_subcommand("validate", "evaluate a saved model on a new cohort");
  CLI::App* report = app.add_subcommand("report", "render metric reports side by side");
  CLI::App* diagnostics = app.add_subcommand("diagnostics", "export IPCW weights and learner weights");
  for (auto* sub : {simulate, fit, validate, report, diagnostics}) common(sub);
  simulate->add_option("--n", n, "development cohort size");
  simulate->add_option("--n-validation", n_validation, "shifted cohort size");
  simulate->add_flag("--no-drift", no_drift, "generate both cohorts from the development model");
  fit->add_option("--scheme", scheme, "refit_candidates or refit_full");
  for (auto* sub : {validate, diagnostics}) sub->add_option("--model", model_path, "model.json");
  validate->add_option("--dev-report", dev_report, "development report.json");
  validate->add_flag("--carry-censoring", carry, "use the training censoring model");
  for (auto* sub : {fit, validate, diagnostics}) {
    sub->add_flag("--censor-at-horizon", censor_at_horizon, "administratively censor follow-up at the horizon");
  }
  validate->add_option("--drift-threshold", drift_threshold, "flag |mean calibration - 1| above this");
  report->add_option("reports", report_paths, "report.json files");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      out << app.help();
      return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
      out << app.help();
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      throw InputError("usage", e.what());
    }
    CLI::App* sub = app.get_subcommands().front();
    auto given = [&](const char* name) { return sub->get_option_no_throw(name) != nullptr && sub->count(name) > 0; };

    RunConfig config;
    if (given("--config")) config = load_config_file(config, config_path);
    config.command = sub->get_name();
    if (given("--seed")) config.seed = seed;
    if (given("--out")) config.out = out_dir;
    if (given("--horizon")) {
      config.tau = horizon;
      config.tau_explicit = true;
    }
    if (given("--workers")) config.workers = workers;
    if (given("--schema")) config.schema = CsvSchema::load(schema_path);
    if (given("--data")) config.data = data_path;
    if (given("--paper-scale")) {
      config.paper_scale = true;
      config.bootstrap_iterations = kPaperBootstrap;
    }
    if (given("--boot")) config.bootstrap_iterations = boot;
    if (given("--loss")) config.loss = loss_kind_from_string(loss);
    if (given("--folds")) config.folds = folds;
    if (given("--inner-folds")) config.inner_folds = inner_folds;
    if (given("--screen")) config.screening.enabled = true;
    if (given("--screen-within-folds")) {
      config.screening.enabled = true;
      config.screening.within_folds = true;
    }
    if (given("--learners")) {
      config.learners.clear();
      std::stringstream list(learners);
      std::string item;
      while (std::getline(list, item, ',')) {
        if (!item.empty()) config.learners.push_back(LearnerSpec::defaults(learner_kind_from_string(item)));
      }
    }
    if (given("--reciprocal-mc")) config.reciprocal_mean_calibration = true;
    if (given("--n")) config.simulation.n_development = n;
    if (given("--n-validation")) config.simulation.n_validation = n_validation;
    if (given("--no-drift")) config.simulation.drift = DriftSpec{};
    if (given("--scheme")) config.internal_scheme = internal_scheme_from_string(scheme);
    if (given("--model")) config.model = model_path;
    if (given("--dev-report")) config.dev_report = dev_report;
    if (given("--carry-censoring")) config.carry_censoring = true;
    if (given("--drift-threshold")) config.drift_threshold = drift_threshold;
    if (given("--censor-at-horizon")) config.censor_at_horizon = true;
    if (given("reports")) {
      config.reports.assign(report_paths.begin(), report_paths.end());
    }
    config.validate();

    if (config.command == "simulate") cmd_simulate(config, out);
    else if (config.command == "fit") cmd_fit(config, out);
    else if (config.command == "validate") cmd_validate(config, out);
    else if (config.command == "report") cmd_report(config, out);
    else cmd_diagnostics(config, out);
    return kExitOk;
  } catch (const Error& e) {
    err << e.to_json().dump() << "\n";
    return e.category() == ErrorCategory::input ? kExitInput : kExitNumerical;
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", "internal"}, {"category", "numerical"}, {"message", e.what()},
                          {"details", nlohmann::json::object()}}
               .dump()
        << "\n";
    return kExitNumerical;
  }
}

}  // namespace survsl::cli
