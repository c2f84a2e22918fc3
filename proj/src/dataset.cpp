#include "survsl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "survsl/error.hpp"
#include "survsl/random.hpp"

namespace survsl {

SurvivalDataset::SurvivalDataset(std::vector<double> times, std::vector<int> events,
                                 Eigen::MatrixXd covariates,
                                 std::vector<std::string> covariate_names,
                                 std::optional<double> horizon_hint)
    : times_(std::move(times)),
      events_(std::move(events)),
      covariates_(std::move(covariates)),
      names_(std::move(covariate_names)),
      horizon_hint_(horizon_hint) {
  const auto n = times_.size();
  if (events_.size() != n || static_cast<std::size_t>(covariates_.rows()) != n) {
    throw InputError("length_mismatch",
                     "times, events and covariate rows must have the same length",
                     {{"times", n}, {"events", events_.size()}, {"rows", covariates_.rows()}});
  }
  if (names_.size() != static_cast<std::size_t>(covariates_.cols())) {
    throw InputError("length_mismatch", "one covariate name is required per covariate column");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(times_[i]) || times_[i] < 0.0) {
      throw InputError("invalid_time", "follow-up time must be finite and nonnegative (row " +
                                           std::to_string(i) + ")",
                       {{"row", i}});
    }
    if (events_[i] != 0 && events_[i] != 1) {
      throw InputError("invalid_event",
                       "event indicator must be 0 or 1 (row " + std::to_string(i) + ")",
                       {{"row", i}});
    }
  }
  if (!covariates_.allFinite()) {
    throw InputError("invalid_covariate", "covariates must be finite");
  }
  if (horizon_hint_ && !(*horizon_hint_ > 0.0)) {
    throw InputError("invalid_horizon", "horizon hint must be positive");
  }
}

std::size_t SurvivalDataset::event_count() const {
  return static_cast<std::size_t>(std::count(events_.begin(), events_.end(), 1));
}

double SurvivalDataset::max_time() const {
  return times_.empty() ? 0.0 : *std::max_element(times_.begin(), times_.end());
}

SurvivalDataset SurvivalDataset::subset(std::span<const std::size_t> rows) const {
  std::vector<double> t(rows.size());
  std::vector<int> e(rows.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), covariates_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = rows[r];
    t[r] = times_.at(i);
    e[r] = events_[i];
    x.row(static_cast<Eigen::Index>(r)) = covariates_.row(static_cast<Eigen::Index>(i));
  }
  return SurvivalDataset(std::move(t), std::move(e), std::move(x), names_, horizon_hint_);
}

SurvivalDataset SurvivalDataset::select_covariates(std::span<const std::size_t> columns) const {
  Eigen::MatrixXd x(covariates_.rows(), static_cast<Eigen::Index>(columns.size()));
  std::vector<std::string> names;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    x.col(static_cast<Eigen::Index>(c)) = covariates_.col(static_cast<Eigen::Index>(columns[c]));
    names.push_back(names_.at(columns[c]));
  }
  return SurvivalDataset(times_, events_, std::move(x), std::move(names), horizon_hint_);
}

std::vector<std::size_t> SurvivalDataset::column_indices(
    const std::vector<std::string>& names) const {
  std::vector<std::size_t> idx;
  std::vector<std::string> missing;
  for (const auto& name : names) {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
      missing.push_back(name);
    } else {
      idx.push_back(static_cast<std::size_t>(it - names_.begin()));
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw InputError("covariate_mismatch", "cohort is missing covariates: " + list,
                     {{"missing", missing}});
  }
  return idx;
}

// ---------------------------------------------------------------------------
// CSV

CsvSchema CsvSchema::from_json(const nlohmann::json& j) {
  CsvSchema s;
  s.time_column = j.value("time", s.time_column);
  s.event_column = j.value("event", s.event_column);
  if (j.contains("covariates")) s.covariate_columns = j.at("covariates").get<std::vector<std::string>>();
  if (j.contains("horizon_hint") && !j.at("horizon_hint").is_null()) {
    s.horizon_hint = j.at("horizon_hint").get<double>();
  }
  return s;
}

CsvSchema CsvSchema::load(const std::filesystem::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) throw InputError("file_not_found", "cannot open schema file " + sidecar.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed_schema", "schema file " + sidecar.string() + ": " + e.what());
  }
}

nlohmann::json CsvSchema::to_json() const {
  nlohmann::json j{{"time", time_column}, {"event", event_column}, {"covariates", covariate_columns}};
  if (horizon_hint) j["horizon_hint"] = *horizon_hint;
  return j;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool is_missing(std::string_view cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "null";
}

double parse_cell(std::string_view cell, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw InputError("parse_error",
                     "malformed numeric value '" + std::string(cell) + "' in column '" + column +
                         "' at data row " + std::to_string(row),
                     {{"row", row}, {"column", column}, {"value", std::string(cell)}});
  }
  return value;
}

}  // namespace

LoadedDataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty_dataset", "CSV input has no header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  std::vector<std::string> header;
  for (auto& h : split_csv_line(line)) header.emplace_back(trim(h));

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t c = 0; c < header.size(); ++c) position.emplace(header[c], c);

  auto locate = [&](const std::string& name) {
    const auto it = position.find(name);
    if (it == position.end()) {
      throw InputError("missing_column", "CSV is missing column '" + name + "'",
                       {{"column", name}});
    }
    return it->second;
  };
  const auto time_col = locate(schema.time_column);
  const auto event_col = locate(schema.event_column);
  std::vector<std::string> cov_names = schema.covariate_columns;
  if (cov_names.empty()) {
    for (const auto& h : header) {
      if (h != schema.time_column && h != schema.event_column) cov_names.push_back(h);
    }
  }
  if (cov_names.empty()) {
    throw InputError("no_covariates", "schema must name at least one covariate column");
  }
  std::vector<std::size_t> cov_cols;
  for (const auto& name : cov_names) cov_cols.push_back(locate(name));

  std::vector<double> times;
  std::vector<int> events;
  std::vector<double> values;
  std::size_t dropped = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line) == "\r") continue;
    ++row;
    const auto fields = split_csv_line(line);
    auto cell = [&](std::size_t c) -> std::string_view {
      return c < fields.size() ? trim(fields[c]) : std::string_view{};
    };
    bool missing = is_missing(cell(time_col)) || is_missing(cell(event_col));
    for (auto c : cov_cols) missing = missing || is_missing(cell(c));
    if (missing) {
      ++dropped;
      continue;
    }
    const double t = parse_cell(cell(time_col), row, schema.time_column);
    const double e = parse_cell(cell(event_col), row, schema.event_column);
    if (e != 0.0 && e != 1.0) {
      throw InputError("invalid_event",
                       "event value '" + std::string(cell(event_col)) + "' at data row " +
                           std::to_string(row) + " is not 0 or 1",
                       {{"row", row}});
    }
    if (t < 0.0) {
      throw InputError("invalid_time", "negative follow-up time at data row " + std::to_string(row),
                       {{"row", row}});
    }
    times.push_back(t);
    events.push_back(static_cast<int>(e));
    for (std::size_t k = 0; k < cov_cols.size(); ++k) {
      values.push_back(parse_cell(cell(cov_cols[k]), row, cov_names[k]));
    }
  }
  if (times.empty()) {
    throw InputError("empty_dataset", "no usable rows after complete-case filtering",
                     {{"dropped_rows", dropped}});
  }
  const auto n = static_cast<Eigen::Index>(times.size());
  const auto p = static_cast<Eigen::Index>(cov_cols.size());
  Eigen::MatrixXd x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, p);
  return {SurvivalDataset(std::move(times), std::move(events), std::move(x), std::move(cov_names),
                          schema.horizon_hint),
          dropped};
}

LoadedDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InputError("file_not_found", "cannot open " + path.string());
  return read_csv(in, schema);
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_csv(std::ostream& out, const SurvivalDataset& data, const std::string& time_column,
               const std::string& event_column) {
  out << time_column << ',' << event_column;
  for (const auto& name : data.covariate_names()) out << ',' << name;
  out << '\n';
  const auto& x = data.covariates();
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << format_double(data.time(i)) << ',' << data.events()[i];
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      out << ',' << format_double(x(static_cast<Eigen::Index>(i), j));
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const SurvivalDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("unwritable_output", "cannot write " + path.string());
  write_csv(out, data);
}

SurvivalDataset censor_at(const SurvivalDataset& data, double tau) {
  if (!(tau > 0.0)) throw InputError("invalid_horizon", "censoring horizon must be positive");
  std::vector<double> t(data.times().begin(), data.times().end());
  std::vector<int> e(data.events().begin(), data.events().end());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] > tau) {
      t[i] = tau;
      e[i] = 0;
    }
  }
  return SurvivalDataset(std::move(t), std::move(e), data.covariates(), data.covariate_names(),
                         data.horizon_hint());
}

// ---------------------------------------------------------------------------
// Generator

GeneratorModel GeneratorModel::kidney_transplant() {
  using K = CovariateModel::Kind;
  GeneratorModel m;
  m.covariates = {
      {"recipient_age", K::normal, 48.0, 13.0, 0.005},
      {"donor_age", K::normal, 45.2, 15.8, 0.012},
      {"creatinine_1y", K::normal, 140.0, 45.0, 0.008},
      {"proteinuria_1y", K::normal, 0.30, 0.25, 1.4},
      {"acute_rejection", K::binary, 0.239, 0.0, 0.5},
      {"male_recipient", K::binary, 0.619, 0.0, 0.1},
      {"previous_transplant", K::binary, 0.191, 0.0, 0.3},
  };
  m.weibull_shape = 1.3;
  m.weibull_scale = 36.0;
  m.censoring_rate = 0.08;
  m.horizon = 7.0;
  return m;
}

void GeneratorModel::validate() const {
  if (!(weibull_shape > 0.0) || !(weibull_scale > 0.0)) {
    throw InputError("invalid_generator", "Weibull shape and scale must be positive");
  }
  if (!(censoring_rate >= 0.0)) throw InputError("invalid_generator", "censoring rate must be >= 0");
  if (!(horizon > 0.0)) throw InputError("invalid_generator", "horizon must be positive");
  for (const auto& c : covariates) {
    if (c.kind == CovariateModel::Kind::binary && !(c.mean >= 0.0 && c.mean <= 1.0)) {
      throw InputError("invalid_generator", "binary covariate " + c.name + " needs a probability");
    }
    if (c.kind == CovariateModel::Kind::normal && !(c.sd >= 0.0)) {
      throw InputError("invalid_generator", "covariate " + c.name + " needs sd >= 0");
    }
  }
}

nlohmann::json GeneratorModel::to_json() const {
  nlohmann::json covs = nlohmann::json::array();
  for (const auto& c : covariates) {
    covs.push_back({{"name", c.name},
                    {"kind", c.kind == CovariateModel::Kind::binary ? "binary" : "normal"},
                    {"mean", c.mean},
                    {"sd", c.sd},
                    {"log_hazard_ratio", c.log_hazard_ratio}});
  }
  return {{"covariates", covs},
          {"weibull_shape", weibull_shape},
          {"weibull_scale", weibull_scale},
          {"censoring_rate", censoring_rate},
          {"horizon", horizon}};
}

GeneratorModel GeneratorModel::from_json(const nlohmann::json& j) {
  GeneratorModel m = kidney_transplant();
  if (j.contains("covariates")) {
    m.covariates.clear();
    for (const auto& c : j.at("covariates")) {
      CovariateModel cm;
      cm.name = c.at("name").get<std::string>();
      cm.kind = c.value("kind", "normal") == "binary" ? CovariateModel::Kind::binary
                                                      : CovariateModel::Kind::normal;
      cm.mean = c.value("mean", 0.0);
      cm.sd = c.value("sd", 1.0);
      cm.log_hazard_ratio = c.value("log_hazard_ratio", 0.0);
      m.covariates.push_back(cm);
    }
  }
  m.weibull_shape = j.value("weibull_shape", m.weibull_shape);
  m.weibull_scale = j.value("weibull_scale", m.weibull_scale);
  m.censoring_rate = j.value("censoring_rate", m.censoring_rate);
  m.horizon = j.value("horizon", m.horizon);
  m.validate();
  return m;
}

DriftSpec DriftSpec::kidney_transplant_decade(std::uint64_t seed) {
  DriftSpec d;
  d.covariate_mean_shifts = {5.5, 9.8, 2.0, -0.25, -0.145, -0.004, 0.02};
  d.event_rate_multiplier = 1.5;
  d.censoring_rate_multiplier = 0.8;
  d.seed = seed;
  return d;
}

void DriftSpec::validate(std::size_t num_covariates) const {
  if (!(event_rate_multiplier > 0.0) || !(censoring_rate_multiplier > 0.0)) {
    throw InputError("invalid_drift", "drift multipliers must be positive");
  }
  if (!covariate_mean_shifts.empty() && covariate_mean_shifts.size() != num_covariates) {
    throw InputError("invalid_drift", "one mean shift is required per covariate");
  }
}

nlohmann::json DriftSpec::to_json() const {
  return {{"covariate_mean_shifts", covariate_mean_shifts},
          {"event_rate_multiplier", event_rate_multiplier},
          {"censoring_rate_multiplier", censoring_rate_multiplier},
          {"seed", seed}};
}

DriftSpec DriftSpec::from_json(const nlohmann::json& j) {
  DriftSpec d;
  if (j.contains("covariate_mean_shifts")) {
    d.covariate_mean_shifts = j.at("covariate_mean_shifts").get<std::vector<double>>();
  }
  d.event_rate_multiplier = j.value("event_rate_multiplier", 1.0);
  d.censoring_rate_multiplier = j.value("censoring_rate_multiplier", 1.0);
  d.seed = j.value("seed", std::uint64_t{0});
  return d;
}

namespace {

double linear_predictor(const GeneratorModel& model, std::span<const double> x) {
  double lp = 0.0;
  for (std::size_t j = 0; j < model.covariates.size(); ++j) {
    lp += model.covariates[j].log_hazard_ratio * (x[j] - model.covariates[j].mean);
  }
  return lp;
}

double hazard_multiplier(Era era, const DriftSpec& spec) {
  return era == Era::shifted ? spec.event_rate_multiplier : 1.0;
}

}  // namespace

double generator_risk(const GeneratorModel& model, Era era, const DriftSpec& spec,
                      std::span<const double> covariates, double t) {
  if (t <= 0.0) return 0.0;
  const double cumhaz = hazard_multiplier(era, spec) *
                        std::pow(t / model.weibull_scale, model.weibull_shape) *
                        std::exp(linear_predictor(model, covariates));
  return -std::expm1(-cumhaz);
}

SimulatedCohort generate_cohort(std::size_t n, Era era, const DriftSpec& spec,
                                const GeneratorModel& model) {
  if (n == 0) throw InputError("invalid_size", "cohort size must be positive");
  model.validate();
  spec.validate(model.covariates.size());

  const auto p = model.covariates.size();
  Rng rng(spec.seed);
  const double multiplier = hazard_multiplier(era, spec);
  const double censor_rate =
      model.censoring_rate * (era == Era::shifted ? spec.censoring_rate_multiplier : 1.0);

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::vector<double> times(n);
  std::vector<int> events(n);
  std::vector<double> risk(n);
  std::vector<double> row(p);
  std::vector<std::string> names;
  for (const auto& c : model.covariates) names.push_back(c.name);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const auto& c = model.covariates[j];
      const double shift = (era == Era::shifted && !spec.covariate_mean_shifts.empty())
                               ? spec.covariate_mean_shifts[j]
                               : 0.0;
      if (c.kind == CovariateModel::Kind::binary) {
        const double prob = std::clamp(c.mean + shift, 0.0, 1.0);
        row[j] = rng.bernoulli(prob) ? 1.0 : 0.0;
      } else {
        row[j] = rng.normal(c.mean + shift, c.sd);
      }
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
    const double lp = linear_predictor(model, row);
    // Invert H(T | x) = E with E ~ Exp(1).
    const double e = rng.exponential(1.0);
    const double event_time =
        model.weibull_scale * std::pow(e / (multiplier * std::exp(lp)), 1.0 / model.weibull_shape);
    const double censor_time =
        censor_rate > 0.0 ? rng.exponential(censor_rate) : std::numeric_limits<double>::infinity();
    times[i] = std::min(event_time, censor_time);
    events[i] = event_time <= censor_time ? 1 : 0;
    risk[i] = generator_risk(model, era, spec, row, model.horizon);
  }
  return {SurvivalDataset(std::move(times), std::move(events), std::move(x), std::move(names),
                          model.horizon),
          std::move(risk)};
}

// ---------------------------------------------------------------------------

std::vector<int> split_folds(const SurvivalDataset& data, int k, std::uint64_t seed) {
  const auto n = data.size();
  if (k < 2) throw InputError("invalid_folds", "fold count must be at least 2");
  if (static_cast<std::size_t>(k) > n) {
    throw InputError("invalid_folds", "fold count " + std::to_string(k) +
                                          " exceeds the number of subjects " + std::to_string(n));
  }
  std::vector<std::size_t> with_event, without_event;
  for (std::size_t i = 0; i < n; ++i) (data.event(i) ? with_event : without_event).push_back(i);
  Rng rng(seed);
  rng.shuffle(with_event);
  rng.shuffle(without_event);

  std::vector<int> folds(n, -1);
  std::size_t position = 0;
  for (const auto* group : {&with_event, &without_event}) {
    for (auto i : *group) folds[i] = static_cast<int>(position++ % static_cast<std::size_t>(k));
  }
  return folds;
}

std::vector<std::size_t> fold_members(std::span<const int> folds, int fold) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (folds[i] == fold) idx.push_back(i);
  }
  return idx;
}

std::vector<std::size_t> fold_complement(std::span<const int> folds, int fold) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (folds[i] != fold) idx.push_back(i);
  }
  return idx;
}

}  // namespace survsl
