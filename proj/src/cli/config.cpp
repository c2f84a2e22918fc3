#include <fstream>

#include "survsl/cli.hpp"
#include "survsl/error.hpp"
#include "survsl/random.hpp"

namespace survsl::cli {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  const std::filesystem::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& target) {
  if (j.contains(key) && !j.at(key).is_null()) target = j.at(key).get<T>();
}

}  // namespace

std::vector<LearnerSpec> default_learner_pool() {
  std::vector<LearnerSpec> pool;
  for (const auto kind : all_learner_kinds()) pool.push_back(LearnerSpec::defaults(kind));
  return pool;
}

SuperLearnerConfig RunConfig::super_learner() const {
  SuperLearnerConfig c;
  c.specs = learners.empty() ? default_learner_pool() : learners;
  c.loss = loss;
  c.tau = tau;
  c.k_folds = folds;
  c.inner_folds = inner_folds;
  c.seed = seed;
  c.screening = screening;
  c.ipcw = ipcw;
  c.exec = execution();
  return c;
}

ValidationOptions RunConfig::validation() const {
  ValidationOptions v;
  v.tau = tau;
  v.bootstrap.iterations = bootstrap_iterations;
  v.bootstrap.seed = derive_seed(seed, 0x626f6f74);
  v.bootstrap.max_undefined_fraction = max_undefined_fraction;
  v.bootstrap.exec = execution();
  v.ipcw = ipcw;
  v.knots = knots;
  v.grid_points = grid_points;
  v.reciprocal_mean_calibration = reciprocal_mean_calibration;
  return v;
}

void RunConfig::validate() const {
  if (!(tau > 0.0)) throw InputError("invalid_horizon", "horizon tau must be positive");
  if (folds < 2) throw InputError("invalid_folds", "at least 2 cross-validation folds are required");
  if (inner_folds < 2) throw InputError("invalid_folds", "at least 2 inner folds are required");
  if (bootstrap_iterations < 1) throw InputError("invalid_bootstrap", "bootstrap needs at least one iteration");
  if (workers < 1) throw InputError("invalid_workers", "worker count must be at least 1");
  if (!(drift_threshold >= 0.0)) throw InputError("invalid_threshold", "drift threshold must be >= 0");
  auto require_file = [](const std::optional<std::filesystem::path>& p, const char* what) {
    if (!p) throw InputError("missing_argument", std::string("the command needs --") + what);
    if (!std::filesystem::exists(*p)) {
      throw InputError("missing_file", std::string(what) + " file does not exist: " + p->string(),
                       {{"path", p->string()}});
    }
  };
  if (command == "fit") require_file(data, "data");
  if (command == "validate") {
    require_file(data, "data");
    require_file(model, "model");
  }
  if (command == "diagnostics") require_file(data, "data");
  if (command == "report") {
    if (reports.empty()) throw InputError("missing_argument", "report needs one or more report files");
    for (const auto& r : reports) {
      if (!std::filesystem::exists(r)) {
        throw InputError("missing_file", "report file does not exist: " + r.string(), {{"path", r.string()}});
      }
    }
  }
  if (command == "simulate" &&
      (simulation.n_development == 0 || simulation.n_validation == 0)) {
    throw InputError("invalid_size", "cohort sizes must be positive");
  }
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json pool = nlohmann::json::array();
  for (const auto& s : super_learner().specs) pool.push_back(s.to_json());
  return {{"command", command},
          {"seed", seed},
          {"horizon", tau},
          {"loss", to_string(loss)},
          {"folds", folds},
          {"inner_folds", inner_folds},
          {"bootstrap", {{"iterations", bootstrap_iterations},
                         {"max_undefined_fraction", max_undefined_fraction}}},
          {"paper_scale", paper_scale},
          {"learners", pool},
          {"screening", {{"enabled", screening.enabled},
                         {"alpha", screening.alpha},
                         {"lambda", screening.lambda},
                         {"within_folds", screening.within_folds}}},
          {"ipcw", {{"floor", ipcw.floor}}},
          {"calibration", {{"knots", knots}, {"grid_points", grid_points}}},
          {"reciprocal_mean_calibration", reciprocal_mean_calibration},
          {"censoring", carry_censoring ? "carry" : "refit"},
          {"censor_at_horizon", censor_at_horizon},
          {"internal_scheme", to_string(internal_scheme)},
          {"drift_threshold", drift_threshold},
          {"schema", schema.to_json()}};
}

void apply_config_json(RunConfig& c, const nlohmann::json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw InputError("malformed_config", "config must be a JSON object");
  try {
    read_if(j, "command", c.command);
    if (j.contains("out")) c.out = resolve(base, j.at("out").get<std::string>());
    if (j.contains("data")) c.data = resolve(base, j.at("data").get<std::string>());
    if (j.contains("model")) c.model = resolve(base, j.at("model").get<std::string>());
    if (j.contains("dev_report")) c.dev_report = resolve(base, j.at("dev_report").get<std::string>());
    if (j.contains("reports")) {
      c.reports.clear();
      for (const auto& r : j.at("reports")) c.reports.push_back(resolve(base, r.get<std::string>()));
    }
    if (j.contains("schema")) {
      const auto& s = j.at("schema");
      c.schema = s.is_string() ? CsvSchema::load(resolve(base, s.get<std::string>())) : CsvSchema::from_json(s);
    }
    if (j.contains("horizon")) {
      c.tau = j.at("horizon").get<double>();
      c.tau_explicit = true;
    }
    if (j.contains("loss")) c.loss = loss_kind_from_string(j.at("loss").get<std::string>());
    read_if(j, "folds", c.folds);
    read_if(j, "inner_folds", c.inner_folds);
    read_if(j, "paper_scale", c.paper_scale);
    if (c.paper_scale) c.bootstrap_iterations = kPaperBootstrap;
    if (j.contains("bootstrap")) {
      const auto& b = j.at("bootstrap");
      if (b.is_number()) {
        c.bootstrap_iterations = b.get<int>();
      } else {
        read_if(b, "iterations", c.bootstrap_iterations);
        read_if(b, "max_undefined_fraction", c.max_undefined_fraction);
      }
    }
    if (j.contains("learners")) {
      c.learners.clear();
      for (const auto& s : j.at("learners")) c.learners.push_back(LearnerSpec::from_json(s).validated());
    }
    if (j.contains("screening")) {
      const auto& s = j.at("screening");
      if (s.is_boolean()) {
        c.screening.enabled = s.get<bool>();
      } else {
        read_if(s, "enabled", c.screening.enabled);
        read_if(s, "alpha", c.screening.alpha);
        read_if(s, "lambda", c.screening.lambda);
        read_if(s, "within_folds", c.screening.within_folds);
      }
    }
    read_if(j, "seed", c.seed);
    read_if(j, "workers", c.workers);
    if (j.contains("ipcw")) read_if(j.at("ipcw"), "floor", c.ipcw.floor);
    if (j.contains("calibration")) {
      read_if(j.at("calibration"), "knots", c.knots);
      read_if(j.at("calibration"), "grid_points", c.grid_points);
    }
    read_if(j, "reciprocal_mean_calibration", c.reciprocal_mean_calibration);
    if (j.contains("censoring")) {
      const auto mode = j.at("censoring").get<std::string>();
      if (mode != "refit" && mode != "carry") {
        throw InputError("malformed_config", "censoring must be \"refit\" or \"carry\"");
      }
      c.carry_censoring = mode == "carry";
    }
    if (j.contains("internal_scheme")) {
      c.internal_scheme = internal_scheme_from_string(j.at("internal_scheme").get<std::string>());
    }
    read_if(j, "drift_threshold", c.drift_threshold);
    read_if(j, "censor_at_horizon", c.censor_at_horizon);
    if (j.contains("simulate")) {
      const auto& s = j.at("simulate");
      read_if(s, "n", c.simulation.n_development);
      read_if(s, "n_development", c.simulation.n_development);
      read_if(s, "n_validation", c.simulation.n_validation);
      read_if(s, "no_drift_z", c.simulation.no_drift_z);
      if (s.contains("generator")) c.simulation.generator = GeneratorModel::from_json(s.at("generator"));
      if (s.contains("drift")) {
        const auto& d = s.at("drift");
        if (d.is_string() && d.get<std::string>() == "none") {
          c.simulation.drift = DriftSpec{};
        } else if (d.is_string() && d.get<std::string>() == "kidney_transplant_decade") {
          c.simulation.drift.reset();
        } else {
          c.simulation.drift = DriftSpec::from_json(d);
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed_config", std::string("invalid config value: ") + e.what());
  }
}

RunConfig load_config_file(RunConfig config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("missing_file", "cannot open config " + path.string(), {{"path", path.string()}});
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed_config", "config " + path.string() + " is not valid JSON: " + e.what());
  }
  apply_config_json(config, j, path.parent_path());
  return config;
}

}  // namespace survsl::cli
