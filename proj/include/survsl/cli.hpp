#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "survsl/censoring.hpp"
#include "survsl/dataset.hpp"
#include "survsl/learners/learner.hpp"
#include "survsl/losses.hpp"
#include "survsl/report.hpp"
#include "survsl/superlearner.hpp"

namespace survsl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNumerical = 2;

inline constexpr int kDeskBootstrap = 200;
inline constexpr int kPaperBootstrap = 2000;

struct SimulationConfig {
  std::size_t n_development = 2000;
  std::size_t n_validation = 2000;
  GeneratorModel generator = GeneratorModel::kidney_transplant();
  /// Unset means DriftSpec::kidney_transplant_decade(seed).
  std::optional<DriftSpec> drift;
  /// Two-sided z threshold for the cohort comparison in the summary.
  double no_drift_z = 3.29;
};

struct RunConfig {
  std::string command;
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> data;
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> dev_report;
  std::vector<std::filesystem::path> reports;
  CsvSchema schema;

  double tau = 7.0;
  bool tau_explicit = false;  // validate falls back to the model's horizon
  LossKind loss = LossKind::ipcw_brier;
  int folds = 10;
  int inner_folds = 10;
  int bootstrap_iterations = kDeskBootstrap;
  double max_undefined_fraction = 0.10;
  bool paper_scale = false;
  std::vector<LearnerSpec> learners;
  ScreeningOptions screening;
  std::uint64_t seed = 1;
  int workers = 1;

  IpcwOptions ipcw;
  int knots = 5;
  int grid_points = 100;
  bool reciprocal_mean_calibration = false;
  bool carry_censoring = false;
  /// Censor follow-up beyond tau at tau on every loaded cohort.
  bool censor_at_horizon = false;
  InternalScheme internal_scheme = InternalScheme::refit_candidates;
  double drift_threshold = 0.15;

  SimulationConfig simulation;

  SuperLearnerConfig super_learner() const;
  ValidationOptions validation() const;
  Execution execution() const { return Execution{workers}; }
  /// Rejects tau <= 0, empty pools, non-positive counts and missing inputs.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Seven-learner pool with default hyperparameters.
std::vector<LearnerSpec> default_learner_pool();

/// Applies a JSON config document on top of `config`. Relative paths are
/// resolved against `base`.
void apply_config_json(RunConfig& config, const nlohmann::json& j, const std::filesystem::path& base);
RunConfig load_config_file(RunConfig config, const std::filesystem::path& path);

void cmd_simulate(const RunConfig& config, std::ostream& log);
void cmd_fit(const RunConfig& config, std::ostream& log);
void cmd_validate(const RunConfig& config, std::ostream& log);
void cmd_report(const RunConfig& config, std::ostream& out);
void cmd_diagnostics(const RunConfig& config, std::ostream& log);

/// Parses argv, runs the command and maps errors to exit codes: 1 for input
/// errors, 2 for numerical failures. Errors are written to `err` as one JSON
/// document.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace survsl::cli
