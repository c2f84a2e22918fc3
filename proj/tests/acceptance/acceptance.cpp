// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include <sys/wait.h>

#include "oracles.hpp"
#include "survsl/bootstrap.hpp"
#include "survsl/censoring.hpp"
#include "survsl/learners/cox.hpp"
#include "survsl/losses.hpp"
#include "survsl/metrics.hpp"
#include "survsl/random.hpp"
#include "survsl/report.hpp"
#include "survsl/superlearner.hpp"

using namespace survsl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// Vertex dominance is checked on every ensemble fit made by the suite.
struct DominanceLog {
  int fits = 0;
  int violations = 0;
  double worst_gap = -INFINITY;

  void record(double ensemble, double best_vertex) {
    ++fits;
    const double gap = ensemble - best_vertex;
    worst_gap = std::max(worst_gap, gap);
    if (gap > 1e-9) ++violations;
  }
  void record(const SuperLearnerModel& model) {
    const auto& cv = model.cv_report();
    record(cv.ensemble_loss, *std::min_element(cv.learner_losses.begin(), cv.learner_losses.end()));
  }
};

DominanceLog dominance;

SimulatedCohort kidney(std::size_t n, std::uint64_t seed) {
  return generate_cohort(n, Era::development, DriftSpec{{}, 1.0, 1.0, seed}, GeneratorModel::kidney_transplant());
}

IpcwWeights km_weights(const SurvivalDataset& data, double tau) {
  return ipcw_weights(fit_censoring_km(data), data, tau);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Plain Mann-Whitney AUC of risk between y = 1 and y = 0, ties count 1/2.
double mann_whitney(const std::vector<double>& risk, const std::vector<int>& y) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < risk.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < risk.size(); ++j) {
      if (y[j]) continue;
      den += 1;
      num += risk[i] > risk[j] ? 1.0 : (risk[i] == risk[j] ? 0.5 : 0.0);
    }
  }
  return num / den;
}

// Mann-Whitney AUC through average ranks, for large samples.
double rank_auc(const std::vector<double>& risk, const std::vector<int>& y) {
  std::vector<std::size_t> order(risk.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return risk[a] < risk[b]; });
  double rank_sum = 0, cases = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && risk[order[j]] == risk[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (y[order[k]]) {
        rank_sum += avg;
        cases += 1;
      }
    }
    i = j;
  }
  const double controls = static_cast<double>(risk.size()) - cases;
  return (rank_sum - cases * (cases + 1) / 2) / (cases * controls);
}

// ---------------------------------------------------------------------------

Outcome auc_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  int instances = 0;
  while (instances < 50) {
    const int n = 10 + static_cast<int>(u(gen) * 191);
    std::vector<double> t(n), risk(n);
    std::vector<int> e(n);
    for (int i = 0; i < n; ++i) {
      t[i] = std::ceil(u(gen) * 40) / 4;
      e[i] = u(gen) < 0.6;
      risk[i] = std::round(u(gen) * 25) / 25;
    }
    const double tau = 2.0 + u(gen) * 5;
    const auto naive = oracle::naive_ipcw(t, e, tau);
    bool has_case = false, has_control = false;
    for (int i = 0; i < n; ++i) {
      has_case = has_case || (naive.case_[i] && naive.w[i] > 0);
      has_control = has_control || (naive.control[i] && naive.w[i] > 0);
    }
    if (!has_case || !has_control) continue;
    const double got = ipcw_auc(risk, km_weights(oracle::make_dataset(t, e), tau));
    worst = std::max(worst, std::abs(got - oracle::pair_auc(risk, naive)));
    ++instances;
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-12 && secs < 10.0,
          "50 instances, max |diff| = " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome weight_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> z(0, 1);
  double worst = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 300;
    std::vector<double> t(n), signal(n);
    std::vector<int> e(n);
    for (int i = 0; i < n; ++i) {
      signal[i] = z(gen);
      const double event = -std::log(1 - u(gen)) / (0.15 * std::exp(0.8 * signal[i]));
      const double cens = -std::log(1 - u(gen)) / 0.05;
      t[i] = std::min(event, cens);
      e[i] = event <= cens;
    }
    const auto w = km_weights(oracle::make_dataset(t, e), 5.0);
    Eigen::MatrixXd oof(n, 3);
    const double noise[3] = {0.3 + u(gen), 0.3 + u(gen), 0.3 + u(gen)};
    const double slope[3] = {0.5 + u(gen), 0.5 + u(gen), 0.5 + u(gen)};
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) oof(i, k) = oracle::expit(-0.5 + slope[k] * signal[i] + noise[k] * z(gen));
    }
    for (auto loss : {LossKind::ipcw_brier, LossKind::negative_binomial_loglik}) {
      const auto opt = optimize_weights(oof, loss, w, static_cast<std::uint64_t>(inst));
      dominance.record(opt.loss, opt.vertex_losses.minCoeff());
      const double grid = oracle::simplex_grid_min([&](const Eigen::Vector3d& v) {
        std::vector<double> r(n);
        for (int i = 0; i < n; ++i) {
          double s = 0;
          for (int k = 0; k < 3; ++k) s += v[k] * oracle::logit(oof(i, k));
          r[i] = oracle::expit(s);
        }
        return evaluate_loss(loss, r, w);
      });
      worst = std::max(worst, std::abs(opt.loss - grid));
    }
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-4 && secs < 60.0,
          "20 instances x {brier, nbll}, max |loss - grid| = " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome no_censoring_reduction() {
  std::mt19937_64 gen(404);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 50 + inst * 15;
    std::vector<double> t(n), risk(n), lp(n);
    std::vector<int> e(n, 1), y(n);
    for (int i = 0; i < n; ++i) {
      risk[i] = 0.02 + 0.96 * u(gen);
      y[i] = u(gen) < risk[i];
      t[i] = y[i] ? 0.1 + 4.9 * u(gen) : 5.0 + 5 * u(gen);
      lp[i] = oracle::logit(risk[i]);
    }
    const double tau = 5.0;
    const auto data = oracle::make_dataset(t, e);
    const auto g = fit_censoring_km(data);
    const auto w = ipcw_weights(g, data, tau);
    double brier = 0, nll = 0;
    for (int i = 0; i < n; ++i) {
      brier += (y[i] - risk[i]) * (y[i] - risk[i]);
      nll -= y[i] ? std::log(risk[i]) : std::log(1 - risk[i]);
    }
    const auto [a, b] = oracle::logistic_fit(lp, y);
    const auto wc = weak_calibration(risk, data, tau, g);
    for (double d : {ipcw_brier(risk, w) - brier / n, negative_binomial_loglik(risk, w) - nll / n,
                     tauroc(risk, data, tau, g) - mann_whitney(risk, y), wc.slope - b,
                     wc.intercept - oracle::logistic_offset_intercept(lp, y)}) {
      worst = std::max(worst, std::abs(d));
    }
    (void)a;
  }
  return {worst <= 1e-12, "20 instances, max |diff| over Brier, NBLL, tAUROC, slope, intercept = " + fmt("%.3g", worst)};
}

Outcome cox_recovery() {
  int inside = 0;
  double censored = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto data = oracle::exponential_groups(2000, 0.1, 2.0, 0.035, 5000 + static_cast<std::uint64_t>(rep));
    censored += 1.0 - static_cast<double>(data.event_count()) / 2000.0;
    const double b = fit_cox(data)->coefficients()[0];
    inside += b >= 0.593 && b <= 0.793;
  }
  // Gradient against a five-point finite-difference stencil of direct summation.
  const auto data = oracle::weibull_ph(200, {0.5, -0.3, 0.2}, 1.2, 5.0, 0.1, 4);
  std::vector<double> t(data.times().begin(), data.times().end());
  std::vector<int> e(data.events().begin(), data.events().end());
  for (auto& v : t) v = std::round(v * 4) / 4 + 0.25;
  double worst_rel = 0;
  for (const Eigen::Vector3d beta : {Eigen::Vector3d(0.3, -0.1, 0.4), Eigen::Vector3d(-0.6, 0.8, 0.1)}) {
    const auto pl = cox_partial_likelihood(data.covariates(), t, e, beta);
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-3;
      auto at = [&](double step) {
        Eigen::VectorXd b = beta;
        b[j] += step;
        return oracle::partial_loglik(data.covariates(), t, e, b);
      };
      const double fd = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
      worst_rel = std::max(worst_rel, std::abs(pl.gradient[j] - fd) / std::abs(fd));
    }
  }
  return {inside >= 95 && worst_rel <= 1e-6,
          std::to_string(inside) + "/100 replicates in [0.593, 0.793] (mean censoring " +
              fmt("%.1f", 100 * censored / 100) + "%), gradient max relative error " + fmt("%.3g", worst_rel)};
}

Outcome elasticnet_zero() {
  std::mt19937_64 gen(606);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  double worst = 0;
  for (int inst = 0; inst < 10; ++inst) {
    const int p = 1 + inst % 5;
    std::vector<double> beta(p);
    for (auto& b : beta) b = u(gen);
    const auto data = oracle::weibull_ph(500, beta, 1.3, 5.0, 0.1, 600 + static_cast<std::uint64_t>(inst));
    LearnerSpec spec = LearnerSpec::defaults(LearnerKind::elasticnet_cox);
    spec.hyperparameters["lambda"] = 0.0;
    const auto enet = fit_elasticnet_cox(data, spec);
    const auto cox = fit_cox(data);
    worst = std::max(worst, (enet->coefficients() - cox->coefficients()).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-4, "10 datasets, max |b_enet - b_cox| = " + fmt("%.3g", worst)};
}

struct CalibrationTruth {
  SimulatedCohort cohort = kidney(10000, 707);
  CensoringModel censoring = fit_censoring_km(cohort.data);
};

Outcome calibration_truth(const CalibrationTruth& c) {
  const auto wc = weak_calibration(c.cohort.true_risk, c.cohort.data, 7.0, c.censoring);
  const auto mc = mean_calibration(c.cohort.true_risk, c.cohort.data, 7.0);
  const auto curve = calibration_curve(c.cohort.true_risk, c.cohort.data, 7.0, c.censoring);
  const bool ok = wc.slope >= 0.9 && wc.slope <= 1.1 && mc.ratio >= 0.95 && mc.ratio <= 1.05 && curve.ici < 0.02;
  return {ok, "slope " + fmt("%.4f", wc.slope) + ", O/E " + fmt("%.4f", mc.ratio) + ", ICI " + fmt("%.4f", curve.ici)};
}

Outcome slope_equivariance(const CalibrationTruth& c) {
  std::vector<double> extreme;
  for (double r : c.cohort.true_risk) extreme.push_back(oracle::expit(2 * oracle::logit(r)));
  const double base = weak_calibration(c.cohort.true_risk, c.cohort.data, 7.0, c.censoring).slope;
  const double doubled = weak_calibration(extreme, c.cohort.data, 7.0, c.censoring).slope;
  const double ratio = doubled / base;
  return {ratio >= 0.45 && ratio <= 0.55, "slope ratio " + fmt("%.6f", ratio)};
}

struct CliRun {
  Outcome drift;
  Outcome determinism;
};

CliRun cli_runs() {
  const fs::path root = fs::temp_directory_path() / "survsl_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = SURVSL_CLI_PATH;
  const auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
  const std::string quiet = " > " + q(root / "log.txt") + " 2>&1";

  CliRun out;
  const auto start = Clock::now();
  const int s = shell(cli + " simulate --seed 7 --n 2000 --n-validation 2000 --out " + q(root / "sim") + quiet);
  const int f = shell(cli + " fit --seed 3 --boot 200 --data " + q(root / "sim" / "development.csv") + " --out " +
                      q(root / "fit") + quiet);
  const int v = f != 0 ? -1
                       : shell(cli + " validate --boot 200 --model " + q(root / "fit" / "model.json") + " --data " +
                               q(root / "sim" / "validation.csv") + " --out " + q(root / "val") + quiet);
  const double secs = seconds_since(start);
  if (s != 0 || f != 0 || v != 0) {
    out.drift = {false, "CLI exit codes simulate/fit/validate = " + std::to_string(s) + "/" + std::to_string(f) +
                            "/" + std::to_string(v) + "; " + slurp(root / "log.txt")};
  } else {
    const auto dev = MetricReport::load(root / "fit" / "report.json");
    const auto val = MetricReport::load(root / "val" / "report.json");
    const double departure = std::abs(val.mean_calibration.point - 1.0);
    const double brier_change = val.brier.point - dev.brier.point;
    const auto model = SuperLearnerModel::from_json(nlohmann::json::parse(slurp(root / "fit" / "model.json")));
    dominance.record(model);
    out.drift = {departure > 0.15 && std::abs(brier_change) < 0.03 && secs < 300.0,
                 "validation O/E " + fmt("%.3f", val.mean_calibration.point) + " (departure " +
                     fmt("%.3f", departure) + "), Brier " + fmt("%.4f", dev.brier.point) + " -> " +
                     fmt("%.4f", val.brier.point) + " (change " + fmt("%+.4f", brier_change) + "), " +
                     fmt("%.1f", secs) + " s end to end"};
  }

  const int f2 = shell(cli + " fit --seed 3 --boot 200 --data " + q(root / "sim" / "development.csv") + " --out " +
                       q(root / "fit2") + quiet);
  if (f != 0 || f2 != 0) {
    out.determinism = {false, "fit failed"};
  } else {
    const bool model_same = slurp(root / "fit" / "model.json") == slurp(root / "fit2" / "model.json");
    const bool report_same = slurp(root / "fit" / "report.json") == slurp(root / "fit2" / "report.json");
    out.determinism = {model_same && report_same, std::string("model.json ") + (model_same ? "identical" : "differs") +
                                                      ", report.json " + (report_same ? "identical" : "differs")};
  }
  return out;
}

Outcome weight_direction() {
  int cox_wins = 0;
  std::ostringstream pairs;
  for (int run = 0; run < 10; ++run) {
    const auto data = kidney(2000, 1000 + static_cast<std::uint64_t>(run)).data;
    SuperLearnerConfig config;
    config.specs = {LearnerSpec::defaults(LearnerKind::cox_main_terms),
                    LearnerSpec::defaults(LearnerKind::random_survival_forest)};
    config.loss = LossKind::ipcw_brier;
    config.seed = static_cast<std::uint64_t>(run);
    const auto model = fit_super_learner(data, config);
    dominance.record(model);
    double cox = 0, rsf = 0;
    for (std::size_t k = 0; k < model.specs().size(); ++k) {
      const double w = model.weights()[static_cast<Eigen::Index>(k)];
      if (model.specs()[k].kind == LearnerKind::cox_main_terms) cox = w;
      if (model.specs()[k].kind == LearnerKind::random_survival_forest) rsf = w;
    }
    cox_wins += cox > rsf;
    pairs << (run ? " " : "") << fmt("%.2f", cox) << "/" << fmt("%.2f", rsf);
  }
  return {cox_wins >= 8, std::to_string(cox_wins) + "/10 runs with Cox > RSF (Cox/RSF: " + pairs.str() + ")"};
}

Outcome extra_dominance_fits() {
  // Additional fits under every loss so the dominance check covers all of them.
  const auto data = kidney(600, 808).data;
  for (auto loss : {LossKind::ipcw_brier, LossKind::negative_binomial_loglik, LossKind::auroc_t}) {
    SuperLearnerConfig config;
    config.specs = {LearnerSpec::defaults(LearnerKind::cox_main_terms), LearnerSpec::defaults(LearnerKind::weibull_aft),
                    LearnerSpec::defaults(LearnerKind::gamma_aft), LearnerSpec::defaults(LearnerKind::royston_parmar)};
    config.loss = loss;
    config.k_folds = 5;
    config.seed = 8;
    dominance.record(fit_super_learner(data, config));
  }
  return {};
}

Outcome coverage() {
  const auto start = Clock::now();
  // Population tAUROC of the true risk from a large uncensored sample.
  GeneratorModel uncensored = GeneratorModel::kidney_transplant();
  uncensored.censoring_rate = 0.0;
  const auto big = generate_cohort(2000000, Era::development, DriftSpec{{}, 1.0, 1.0, 909}, uncensored);
  std::vector<int> y(big.data.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = big.data.time(i) <= 7.0;
  const double truth = rank_auc(big.true_risk, y);

  int covered = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto c = kidney(1000, 10000 + static_cast<std::uint64_t>(rep));
    BootstrapConfig config;
    config.iterations = 500;
    config.seed = derive_seed(99, static_cast<std::uint64_t>(rep));
    const Metric metric = [](const SurvivalDataset& cohort, std::span<const double> risk) {
      return tauroc(risk, cohort, 7.0, fit_censoring_km(cohort));
    };
    const RiskProducer producer = [&](const SurvivalDataset&, const SurvivalDataset&) { return c.true_risk; };
    const auto est = bootstrap_ci(metric, c.data, producer, config);
    covered += est.lower <= truth && truth <= est.upper;
  }
  const double secs = seconds_since(start);
  return {covered >= 88 && secs < 600.0, std::to_string(covered) + "/100 intervals cover the true tAUROC " +
                                             fmt("%.4f", truth) + ", " + fmt("%.1f", secs) + " s"};
}

Outcome guarded(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, std::string("threw: ") + e.what()};
  }
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, Outcome>> results(12);
  const CalibrationTruth calib;

  results[0] = {"tAUROC oracle equivalence", guarded(auc_oracle)};
  results[1] = {"weight optimization oracle equivalence", guarded(weight_oracle)};
  results[3] = {"no-censoring reduction", guarded(no_censoring_reduction)};
  results[4] = {"Cox recovery", guarded(cox_recovery)};
  results[5] = {"elastic net lambda 0 consistency", guarded(elasticnet_zero)};
  results[6] = {"calibration truth", guarded([&] { return calibration_truth(calib); })};
  results[7] = {"slope equivariance", guarded([&] { return slope_equivariance(calib); })};
  CliRun cli;
  try {
    cli = cli_runs();
  } catch (const std::exception& e) {
    cli.drift = cli.determinism = {false, std::string("threw: ") + e.what()};
  }
  results[8] = {"drift reproduction", cli.drift};
  results[9] = {"weight-pattern direction", guarded(weight_direction)};
  results[10] = {"bootstrap coverage", guarded(coverage)};
  results[11] = {"determinism", cli.determinism};
  const Outcome extra = guarded(extra_dominance_fits);
  results[2] = {"vertex dominance",
                {extra.detail.empty() && dominance.violations == 0 && dominance.fits > 0,
                 std::to_string(dominance.fits) + " ensemble fits, " + std::to_string(dominance.violations) +
                     " violations, max gap " + fmt("%.3g", dominance.worst_gap) +
                     (extra.detail.empty() ? "" : "; " + extra.detail)}};

  int failed = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& [name, o] = results[i];
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << name << ": " << o.detail << std::endl;
    failed += !o.pass;
  }
  return failed;
}
