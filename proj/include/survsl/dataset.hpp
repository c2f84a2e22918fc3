#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace survsl {

/// Right-censored cohort. Times are in years; event is 1 when the event was
/// observed at times[i] and 0 when the subject was censored there. Immutable
/// after construction, which validates every invariant.
class SurvivalDataset {
 public:
  SurvivalDataset(std::vector<double> times, std::vector<int> events, Eigen::MatrixXd covariates,
                  std::vector<std::string> covariate_names,
                  std::optional<double> horizon_hint = std::nullopt);

  std::size_t size() const { return times_.size(); }
  std::size_t num_covariates() const { return static_cast<std::size_t>(covariates_.cols()); }

  std::span<const double> times() const { return times_; }
  std::span<const int> events() const { return events_; }
  double time(std::size_t i) const { return times_[i]; }
  bool event(std::size_t i) const { return events_[i] == 1; }
  const Eigen::MatrixXd& covariates() const { return covariates_; }
  const std::vector<std::string>& covariate_names() const { return names_; }
  std::optional<double> horizon_hint() const { return horizon_hint_; }

  std::size_t event_count() const;
  double max_time() const;

  /// Rows in the given order; repeated indices produce repeated rows.
  SurvivalDataset subset(std::span<const std::size_t> rows) const;
  SurvivalDataset select_covariates(std::span<const std::size_t> columns) const;
  /// Column indices of `names` in this dataset. Throws an input error naming
  /// every missing column.
  std::vector<std::size_t> column_indices(const std::vector<std::string>& names) const;

 private:
  std::vector<double> times_;
  std::vector<int> events_;
  Eigen::MatrixXd covariates_;
  std::vector<std::string> names_;
  std::optional<double> horizon_hint_;
};

/// Column roles for CSV ingestion. An empty covariate list means "every
/// column that is not the time or the event column".
struct CsvSchema {
  std::string time_column = "time";
  std::string event_column = "event";
  std::vector<std::string> covariate_columns;
  std::optional<double> horizon_hint;

  static CsvSchema from_json(const nlohmann::json& j);
  static CsvSchema load(const std::filesystem::path& sidecar);
  nlohmann::json to_json() const;
};

struct LoadedDataset {
  SurvivalDataset data;
  std::size_t dropped_rows = 0;  // complete-case exclusions
};

/// Reads a header-first, comma-separated, '.'-decimal file. Empty, "NA",
/// "NaN" and "null" cells are missing; rows with any missing field among the
/// schema's columns are dropped and counted.
LoadedDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
LoadedDataset read_csv(std::istream& in, const CsvSchema& schema);

/// Writes time, event and covariates with shortest round-trip formatting, so
/// read_csv(write_csv(d)) reproduces d exactly.
void write_csv(std::ostream& out, const SurvivalDataset& data,
               const std::string& time_column = "time", const std::string& event_column = "event");
void write_csv(const std::filesystem::path& path, const SurvivalDataset& data);

std::string format_double(double value);

/// Administrative censoring at tau: times beyond tau become tau with event 0.
SurvivalDataset censor_at(const SurvivalDataset& data, double tau);

// ---------------------------------------------------------------------------
// Synthetic two-era cohorts.

struct CovariateModel {
  enum class Kind { normal, binary };
  std::string name;
  Kind kind = Kind::normal;
  double mean = 0.0;  // probability for binary covariates
  double sd = 1.0;    // ignored for binary covariates
  double log_hazard_ratio = 0.0;
};

/// Weibull proportional-hazards event times with independent exponential
/// censoring:
///   H(t | x) = m * (t / scale)^shape * exp(sum_j beta_j (x_j - mean_j)),
/// where mean_j is the development-era mean and m the era's hazard multiplier.
struct GeneratorModel {
  std::vector<CovariateModel> covariates;
  double weibull_shape = 1.0;
  double weibull_scale = 1.0;
  double censoring_rate = 0.0;  // per year; 0 disables censoring
  double horizon = 7.0;

  /// Kidney-transplant-like cohort: recipient and donor age, one-year
  /// creatinine, proteinuria, acute rejection, recipient sex, previous graft.
  static GeneratorModel kidney_transplant();
  static GeneratorModel from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

struct DriftSpec {
  std::vector<double> covariate_mean_shifts;  // empty means no shifts
  double event_rate_multiplier = 1.0;
  double censoring_rate_multiplier = 1.0;
  std::uint64_t seed = 0;

  /// Shifts that move the kidney_transplant() development cohort in the
  /// directions seen a decade later: older donors and recipients, less acute
  /// rejection, lower proteinuria.
  static DriftSpec kidney_transplant_decade(std::uint64_t seed);
  static DriftSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate(std::size_t num_covariates) const;
};

enum class Era { development, shifted };

struct SimulatedCohort {
  SurvivalDataset data;
  std::vector<double> true_risk;  // P(T <= horizon | x) under the era's model
};

SimulatedCohort generate_cohort(std::size_t n, Era era, const DriftSpec& spec,
                                const GeneratorModel& model);

/// Closed-form event probability by `t` for one covariate row.
double generator_risk(const GeneratorModel& model, Era era, const DriftSpec& spec,
                      std::span<const double> covariates, double t);

// ---------------------------------------------------------------------------

/// Stratified k-fold assignment. Events and non-events are shuffled
/// separately, concatenated (events first) and dealt round-robin, so fold
/// sizes differ by at most one and events spread as evenly as possible.
std::vector<int> split_folds(const SurvivalDataset& data, int k, std::uint64_t seed);
std::vector<std::size_t> fold_members(std::span<const int> folds, int fold);
std::vector<std::size_t> fold_complement(std::span<const int> folds, int fold);

}  // namespace survsl
