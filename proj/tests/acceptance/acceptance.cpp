#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kolmo/bsde/rollout.hpp"
#include "kolmo/bsde/train.hpp"
#include "kolmo/eval/convergence.hpp"
#include "kolmo/eval/metrics.hpp"
#include "kolmo/eval/oracles.hpp"
#include "kolmo/eval/sweeps.hpp"
#include "kolmo/linear_fk/linear_fk.hpp"
#include "kolmo/problems/registry.hpp"
#include "kolmo/sde/path_batch.hpp"
#include "kolmo/util/errors.hpp"

namespace {

using namespace kolmo;
using bsde::TrainConfig;
using eval::Matrix;
using eval::Vector;
using sde::Scheme;

// Pinned tolerances.
constexpr double kStrongEmSlope = 0.5;
constexpr double kStrongMilsteinSlope = 1.0;
constexpr double kStrongSlopeTol = 0.15;
constexpr double kStrongMaxSeconds = 60.0;

constexpr double kLmSlope = 2.0;
constexpr double kEmStationarySlope = 1.0;
constexpr double kStationarySlopeTol = 0.3;
constexpr double kStationaryMaxSeconds = 120.0;

constexpr double kGradientRelTol = 1e-4;

constexpr double kHeatMaxError = 0.02;
constexpr int kHeatProbes = 10000;
constexpr double kHeatMaxSeconds = 600.0;

constexpr double kDiffusionTarget = 0.1;
constexpr int kDiffusionPoints = 4096;
constexpr double kComplexitySlopeLo = 1.2;
constexpr double kComplexitySlopeHi = 2.4;
constexpr int kComplexityRepeats = 3;

constexpr double kBsExpEmLo = 10.8;
constexpr double kBsExpEmHi = 11.1;
constexpr double kBsExpMilsteinLo = 11.55;
constexpr double kBsExpMilsteinHi = 11.80;
constexpr double kBsExpPicard = 11.882;
constexpr int kBsExpSeeds = 5;

constexpr double kAllenCahnEmLo = 0.5565;
constexpr double kAllenCahnEmHi = 0.5573;
constexpr double kAllenCahnMilsteinLo = 0.5568;
constexpr double kAllenCahnMilsteinHi = 0.5573;
constexpr double kAllenCahnReference = 0.55706;
constexpr int kAllenCahnSeeds = 5;
constexpr int kAllenCahnSteps = 4000;
const std::vector<bsde::LrSegment> kAllenCahnSchedule = {{0, 1e-3}, {2000, 2e-4}, {3000, 2e-5}};

constexpr double kHjbExact = 4.590;
constexpr double kHjbOracleTol = 0.02;
constexpr long kHjbSamples = 1000000;
constexpr double kHjbOracleMaxSeconds = 60.0;
constexpr double kHjbEmTol = 0.05;
constexpr int kHjbSeeds = 5;
constexpr int kHjbSteps = 4000;
const std::vector<bsde::LrSegment> kHjbSchedule = {{0, 1e-2}, {2000, 2e-3}, {3000, 5e-4}};

constexpr int kModesDim = 10;
constexpr int kModesSeeds = 5;
constexpr int kModesSteps = 3000;
constexpr double kModesLr = 0.004;
constexpr double kModesSigmas = 3.0;

constexpr int kGbmDim = 10;
constexpr int kGbmSeeds = 10;
constexpr int kGbmSteps = 50000;
constexpr int kGbmProbes = 1000;
constexpr long kGbmReferenceSamples = 100000;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

bool report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::cout << "criterion " << id << ' ' << name << ": " << (pass ? "PASS" : "FAIL") << ' ' << detail << std::endl;
  return pass;
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

std::string seeds_text(const bsde::RepeatSummary& s) {
  std::string out = "[";
  for (std::size_t k = 0; k < s.values.size(); ++k) out += (k ? " " : "") + num(s.values[k]);
  return out + "]";
}

bool strong_order() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> taus;
  for (int k = 4; k <= 9; ++k) taus.push_back(std::ldexp(1.0, -k));
  const eval::Gbm1d gbm;
  const double em = eval::strong_order_fit(gbm, Scheme::kEm, taus, 10000, 1).fit.slope;
  const double mil = eval::strong_order_fit(gbm, Scheme::kMilstein, taus, 10000, 1).fit.slope;
  const double wall = seconds_since(start);
  const bool pass = std::abs(em - kStrongEmSlope) <= kStrongSlopeTol &&
                    std::abs(mil - kStrongMilsteinSlope) <= kStrongSlopeTol && wall < kStrongMaxSeconds;
  return report(1, "strong_order", pass,
                "em_slope=" + num(em) + " milstein_slope=" + num(mil) + " wall_s=" + num(wall, 3));
}

bool lm_stationary() {
  const auto start = std::chrono::steady_clock::now();
  eval::StationaryConfig c;
  c.n_steps = 200000;
  c.burn_in = 2000;
  c.chains = 100;
  const eval::StationaryFit f = eval::lm_stationary_fit({0.4, 0.2, 0.1, 0.05}, c, 1);
  const double wall = seconds_since(start);
  std::string detail;
  for (const eval::StationaryPoint& p : f.lm_points) {
    detail += "lm(tau=" + num(p.tau) + ")=" + num(p.error, 3) + "+-" + num(p.std_error, 2) + " ";
  }
  for (const eval::StationaryPoint& p : f.em_points) {
    detail += "em(tau=" + num(p.tau) + ")=" + num(p.error, 3) + "+-" + num(p.std_error, 2) + " ";
  }
  const bool lm_ok = f.lm_fit && std::abs(f.lm_fit->slope - kLmSlope) <= kStationarySlopeTol;
  const bool em_ok = f.em_fit && std::abs(f.em_fit->slope - kEmStationarySlope) <= kStationarySlopeTol;
  detail += "lm_slope=" + (f.lm_fit ? num(f.lm_fit->slope) : "refused(" + f.lm_refusal + ")");
  detail += " em_slope=" + (f.em_fit ? num(f.em_fit->slope) : "refused(" + f.em_refusal + ")");
  detail += " wall_s=" + num(wall, 3);
  return report(2, "lm_stationary", lm_ok && em_ok && wall < kStationaryMaxSeconds, detail);
}

// Largest relative deviation between tape gradients and central differences,
// skipping stencils that straddle a ReLU kink.
double gradient_deviation(const std::string& name, Scheme scheme, bsde::MilsteinMode mode, double x0, int& checked) {
  const problems::PdeProblem p = problems::build_problem(name, {{"d", 2}});
  const sde::TimeGrid grid(p.horizon, 3);
  std::mt19937_64 rng(7);
  bsde::DeepBsdeModel model =
      bsde::DeepBsdeModel::create({2, grid, scheme, mode, p.input_shift, p.input_scale}, rng);
  Matrix start(2, 2);
  start << x0, 1.1 * x0, 0.9 * x0, x0;
  const sde::PathBatch paths = sde::simulate_batch(p.dynamics, scheme, start, grid, 3, 3);
  model.zero_grad();
  nn::Tape tape;
  tape.backward(bsde::record_loss(tape, model, paths, p));
  double worst = 0.0;
  checked = 0;
  for (nn::ParamView& v : model.params()) {
    for (std::size_t k = 0; k < v.size; ++k) {
      const double saved = v.value[k];
      const double h = 1e-6 * std::max(1.0, std::abs(saved));
      v.value[k] = saved + h;
      const double lp = bsde::loss(model, paths, p);
      v.value[k] = saved - h;
      const double lm = bsde::loss(model, paths, p);
      v.value[k] = saved;
      const double l0 = bsde::loss(model, paths, p);
      const double numeric = (lp - lm) / (2 * h);
      if (std::abs((lp - l0) / h - numeric) > 1e-3 * std::max(1.0, std::abs(numeric))) continue;
      const double scale = std::max({std::abs(numeric), std::abs(v.grad[k]), 1e-3 * std::max(1.0, l0)});
      worst = std::max(worst, std::abs(v.grad[k] - numeric) / scale);
      ++checked;
    }
  }
  return worst;
}

bool gradients() {
  struct Case {
    const char* label;
    const char* problem;
    Scheme scheme;
    bsde::MilsteinMode mode;
    double x0;
  };
  const std::vector<Case> cases = {
      {"em", "hjb_xdiff", Scheme::kEm, bsde::MilsteinMode::kExplicit, 1.0},
      {"milstein_explicit", "allen_cahn_xdiff", Scheme::kMilstein, bsde::MilsteinMode::kExplicit, 0.5},
      {"milstein_learned", "allen_cahn_xdiff", Scheme::kMilstein, bsde::MilsteinMode::kLearned, 0.5},
      {"lm", "allen_cahn", Scheme::kLm, bsde::MilsteinMode::kExplicit, 0.2},
  };
  bool pass = true;
  std::string detail;
  for (const Case& c : cases) {
    int checked = 0;
    const double dev = gradient_deviation(c.problem, c.scheme, c.mode, c.x0, checked);
    pass = pass && dev <= kGradientRelTol && checked > 0;
    detail += std::string(c.label) + "_max_rel=" + num(dev, 3) + "(" + std::to_string(checked) + " params) ";
  }
  return report(3, "gradient_check", pass, detail);
}

bool heat_oracle() {
  const auto start = std::chrono::steady_clock::now();
  const problems::PdeProblem p = problems::build_problem("heat");
  TrainConfig c = bsde::default_train_config(p);
  c.sampler = bsde::Sampler::kFreshBox;
  const bsde::TrainResult r = bsde::train(p, Scheme::kEm, c);
  const Matrix probes = eval::uniform_probes(kHeatProbes, p.dim, p.domain_lo, p.domain_hi, 2);
  const double eps =
      eval::avg_relative_error(r.model.predict_g0_batch(probes), eval::exact_reference(p, probes)).mean;
  const double wall = seconds_since(start);
  return report(4, "heat_oracle", eps <= kHeatMaxError && wall < kHeatMaxSeconds,
                "avg_relative_error=" + num(eps, 4) + " d=" + std::to_string(p.dim) + " wall_s=" + num(wall, 4));
}

// Raw U[-1, 1] initialization without the pilot shift for the complexity protocol.
eval::SweepConfig diffusion_sweep_config(const problems::PdeProblem& p) {
  eval::SweepConfig c;
  c.train = bsde::default_train_config(p);
  c.train.init = nn::InitScaling::kUnit;
  c.train.pilot_init = false;
  c.probes = 10000;
  return c;
}

bool nonlinear_diffusion() {
  bool pass = true;
  std::string detail;
  for (int d : {2, 4, 6}) {
    const problems::PdeProblem p = problems::build_problem("nonlinear_diffusion", {{"d", d}});
    const eval::SweepRow row = eval::sweep_cell(p, Scheme::kEm, kDiffusionPoints, diffusion_sweep_config(p));
    pass = pass && row.eps_mean < kDiffusionTarget;
    detail += "eps(d=" + std::to_string(d) + ",P=4096)=" + num(row.eps_mean, 4) + " ";
  }
  const eval::ProblemFactory factory = [](int d) {
    return problems::build_problem("nonlinear_diffusion", {{"d", d}});
  };
  std::vector<int> point_counts;
  for (int p = 4; p <= 4096; p *= 2) point_counts.push_back(p);
  eval::SweepConfig c = diffusion_sweep_config(factory(2));
  c.repeats = kComplexityRepeats;
  const eval::SweepResult s =
      eval::complexity_sweep(factory, Scheme::kEm, {2, 4, 6, 8, 10}, point_counts, kDiffusionTarget, c);
  detail += "P*=";
  for (std::size_t k = 0; k < s.dims.size(); ++k) {
    detail += (k ? "," : "") + std::to_string(s.dims[k]) + ":" + std::to_string(s.p_star[k]);
  }
  if (s.fit) {
    detail += " slope=" + num(s.fit->slope, 4) + " loo_spread=" + num(s.fit->slope_spread, 3);
    pass = pass && within(s.fit->slope, kComplexitySlopeLo, kComplexitySlopeHi);
  } else {
    detail += " slope=refused(" + s.fit_refusal + ")";
    pass = false;
  }
  if (!s.censored_dims.empty()) detail += " censored=" + std::to_string(s.censored_dims.size());
  return report(5, "nonlinear_diffusion", pass, detail);
}

// Trains seeds one at a time so a diverged seed does not hide the others.
bsde::RepeatSummary surviving_seeds(const problems::PdeProblem& p, Scheme scheme, const TrainConfig& config,
                                    int repeats, std::string& diverged) {
  std::vector<double> values;
  for (int k = 0; k < repeats; ++k) {
    TrainConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(k);
    try {
      values.push_back(bsde::train(p, scheme, c).report.final_estimate);
    } catch (const TrainingDiverged& e) {
      diverged += " " + std::string(sde::scheme_name(scheme)) + "_seed" + std::to_string(c.seed) + "_diverged_at=" +
                  std::to_string(e.step());
    }
  }
  return bsde::summarize(values);
}

bool bs_exp_values() {
  const problems::PdeProblem p = problems::build_problem("bs_exp");
  const TrainConfig c = bsde::default_train_config(p);
  std::string diverged;
  const bsde::RepeatSummary em = surviving_seeds(p, Scheme::kEm, c, kBsExpSeeds, diverged);
  const bsde::RepeatSummary mil = surviving_seeds(p, Scheme::kMilstein, c, kBsExpSeeds, diverged);
  const bool pass = diverged.empty() && within(em.mean, kBsExpEmLo, kBsExpEmHi) &&
                    within(mil.mean, kBsExpMilsteinLo, kBsExpMilsteinHi) &&
                    std::abs(mil.mean - kBsExpPicard) < std::abs(em.mean - kBsExpPicard);
  return report(6, "bs_exp_values", pass,
                "em=" + num(em.mean) + "+-" + num(em.sem, 2) + " " + seeds_text(em) + " milstein=" + num(mil.mean) +
                    "+-" + num(mil.sem, 2) + " " + seeds_text(mil) + diverged);
}

bool allen_cahn_table() {
  const problems::PdeProblem p = problems::build_problem("allen_cahn_xdiff");
  TrainConfig c = bsde::default_train_config(p);
  c.steps = kAllenCahnSteps;
  c.schedule = kAllenCahnSchedule;
  const bsde::RepeatSummary em = bsde::train_repeats(p, Scheme::kEm, c, kAllenCahnSeeds);
  const bsde::RepeatSummary mil = bsde::train_repeats(p, Scheme::kMilstein, c, kAllenCahnSeeds);
  auto mae = [](const bsde::RepeatSummary& s) {
    double sum = 0.0;
    for (double v : s.values) sum += std::abs(v - kAllenCahnReference);
    return sum / static_cast<double>(s.values.size());
  };
  const bool pass = within(em.mean, kAllenCahnEmLo, kAllenCahnEmHi) &&
                    within(mil.mean, kAllenCahnMilsteinLo, kAllenCahnMilsteinHi) && mae(mil) <= mae(em);
  return report(7, "allen_cahn_table", pass,
                "em=" + num(em.mean, 7) + "+-" + num(em.sem, 2) + " milstein=" + num(mil.mean, 7) + "+-" +
                    num(mil.sem, 2) + " mae_em=" + num(mae(em), 3) + " mae_milstein=" + num(mae(mil), 3));
}

bool hjb_oracle() {
  const auto start = std::chrono::steady_clock::now();
  const eval::McEstimate ref = eval::hjb_reference(Vector::Zero(100), 1.0, 1.0, 0.0, kHjbSamples, 1);
  const double oracle_wall = seconds_since(start);
  const problems::PdeProblem p = problems::build_problem("hjb");
  TrainConfig c = bsde::default_train_config(p);
  c.pilot_init = false;
  c.steps = kHjbSteps;
  c.schedule = kHjbSchedule;
  std::vector<bsde::ExperimentReport> em_reports;
  const bsde::RepeatSummary em = bsde::train_repeats(p, Scheme::kEm, c, kHjbSeeds, &em_reports);
  const bsde::RepeatSummary lm = bsde::train_repeats(p, Scheme::kLm, c, kHjbSeeds);
  // Mean EM estimate at the first checkpoint, to show the approach.
  double first = 0.0;
  for (const bsde::ExperimentReport& r : em_reports) first += r.curve.front().g0_probe;
  first /= static_cast<double>(em_reports.size());
  const double em_err = std::abs(em.mean - ref.value);
  const double lm_err = std::abs(lm.mean - ref.value);
  const bool pass = std::abs(ref.value - kHjbExact) <= kHjbOracleTol && oracle_wall < kHjbOracleMaxSeconds &&
                    em_err <= kHjbEmTol && em_err < std::abs(first - ref.value) && lm_err > em_err;
  return report(8, "hjb_oracle", pass,
                "reference=" + num(ref.value) + "+-" + num(ref.std_error, 2) + " oracle_wall_s=" + num(oracle_wall, 3) +
                    " em_first_checkpoint=" + num(first) + " em=" + num(em.mean) + "+-" + num(em.sem, 2) +
                    " lm=" + num(lm.mean) + "+-" + num(lm.sem, 2));
}

bool milstein_modes() {
  const problems::PdeProblem p = problems::build_problem("bs_exp", {{"d", kModesDim}, {"steps", kModesSteps}});
  TrainConfig c = bsde::default_train_config(p);
  c.schedule = {{0, kModesLr}};
  c.milstein_mode = bsde::MilsteinMode::kExplicit;
  const bsde::RepeatSummary ex = bsde::train_repeats(p, Scheme::kMilstein, c, kModesSeeds);
  c.milstein_mode = bsde::MilsteinMode::kLearned;
  const bsde::RepeatSummary le = bsde::train_repeats(p, Scheme::kMilstein, c, kModesSeeds);
  const double combined = std::sqrt(ex.sem * ex.sem + le.sem * le.sem);
  const double gap = std::abs(ex.mean - le.mean);
  return report(9, "milstein_modes", gap <= kModesSigmas * combined,
                "d=" + std::to_string(kModesDim) + " explicit=" + num(ex.mean) + "+-" + num(ex.sem, 2) +
                    " learned=" + num(le.mean) + "+-" + num(le.sem, 2) + " gap_in_se=" + num(gap / combined, 3));
}

bool gbm_monotonicity() {
  const problems::PdeProblem p = problems::build_problem("gbm", {{"d", kGbmDim}});
  const linear_fk::GbmParams gp = linear_fk::GbmParams::from_problem(p);
  const Matrix probes = eval::uniform_probes(kGbmProbes, p.dim, p.domain_lo, p.domain_hi, 3);
  const std::vector<double> ref_values = linear_fk::cached_references(
      "", "gbm-d" + std::to_string(kGbmDim), probes, kGbmReferenceSamples, 11,
      [&gp](const Vector& x, std::uint64_t s) { return linear_fk::gbm_reference(x, 0.0, gp, kGbmReferenceSamples, s).value; });
  const Vector reference = Eigen::Map<const Vector>(ref_values.data(), static_cast<Eigen::Index>(ref_values.size()));
  std::map<Scheme, std::vector<double>> eps;
  for (Scheme s : {Scheme::kEm, Scheme::kMilstein}) {
    for (int k = 0; k < kGbmSeeds; ++k) {
      linear_fk::LinearFkConfig c = linear_fk::default_linear_config(p);
      c.scheme = s;
      c.steps = kGbmSteps;
      c.seed = 1 + static_cast<std::uint64_t>(k);
      const linear_fk::LinearResult r = linear_fk::train_linear(p, c);
      eps[s].push_back(eval::avg_relative_error(r.model.predict_batch(probes), reference).mean);
    }
  }
  const bsde::RepeatSummary em = bsde::summarize(eps[Scheme::kEm]);
  const bsde::RepeatSummary mil = bsde::summarize(eps[Scheme::kMilstein]);
  return report(10, "gbm_monotonicity", mil.mean <= em.mean,
                "d=" + std::to_string(kGbmDim) + " steps=" + std::to_string(kGbmSteps) + " eps_em=" + num(em.mean, 4) +
                    "+-" + num(em.sem, 2) + " eps_milstein=" + num(mil.mean, 4) + "+-" + num(mil.sem, 2));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks", "kolmo_acceptance"};
  int criterion = 0;
  app.add_option("--criterion", criterion, "criterion number 1-10; 0 runs all")->check(CLI::Range(0, 10));
  CLI11_PARSE(app, argc, argv);
  const std::vector<std::function<bool()>> checks = {strong_order, lm_stationary, gradients,      heat_oracle,
                                                     nonlinear_diffusion, bs_exp_values, allen_cahn_table,
                                                     hjb_oracle,   milstein_modes, gbm_monotonicity};
  bool all = true;
  for (int k = 1; k <= 10; ++k) {
    if (criterion != 0 && criterion != k) continue;
    try {
      all = checks[k - 1]() && all;
    } catch (const std::exception& e) {
      all = report(k, "error", false, e.what()) && all;
    }
  }
  return all ? 0 : 1;
}
