#include "kolmo/bsde/train.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <exception>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "kolmo/bsde/rollout.hpp"
#include "kolmo/nn/tape.hpp"
#include "kolmo/sde/path_batch.hpp"
#include "kolmo/sde/random.hpp"

namespace kolmo::bsde {
namespace {

using sde::StreamTag;
using sde::stream_key;

Matrix uniform_box(const PdeProblem& problem, int rows, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> box(problem.domain_lo, problem.domain_hi);
  Matrix x(rows, problem.dim);
  for (int p = 0; p < rows; ++p) {
    for (int i = 0; i < problem.dim; ++i) x(p, i) = box(rng);
  }
  return x;
}

Matrix point_set(const PdeProblem& problem, const TrainConfig& config) {
  std::mt19937_64 rng = sde::substream(config.seed, stream_key(StreamTag::kInitialPoints), 0);
  return uniform_box(problem, config.points, rng);
}

Vector start_point(const PdeProblem& problem, const TrainConfig& config) {
  const Vector& x = config.start_point.size() > 0 ? config.start_point : problem.x0;
  if (x.size() != problem.dim) throw ConfigError("start point dimension does not match the problem");
  return x;
}

Matrix cycle_rows(const Matrix& set, long first, int rows) {
  Matrix x(rows, set.cols());
  for (int k = 0; k < rows; ++k) x.row(k) = set.row((first + k) % set.rows());
  return x;
}

Matrix start_points_impl(const PdeProblem& problem, const TrainConfig& config, int step, const Matrix& set) {
  switch (config.sampler) {
    case Sampler::kFixedPoint:
      return start_point(problem, config).transpose().replicate(config.batch, 1);
    case Sampler::kPointSet:
      return cycle_rows(set, static_cast<long>(step) * config.batch, config.batch);
    case Sampler::kFreshBox: {
      std::mt19937_64 rng =
          sde::substream(config.seed, stream_key(StreamTag::kInitialPoints, static_cast<std::uint64_t>(step)), 1);
      return uniform_box(problem, config.batch, rng);
    }
  }
  throw ContractError("unknown sampler");
}

Matrix pilot_points(const PdeProblem& problem, const TrainConfig& config, const Matrix& set) {
  switch (config.sampler) {
    case Sampler::kFixedPoint:
      return start_point(problem, config).transpose().replicate(config.pilot_batch, 1);
    case Sampler::kPointSet:
      return cycle_rows(set, 0, config.pilot_batch);
    case Sampler::kFreshBox: {
      std::mt19937_64 rng = sde::substream(config.seed, stream_key(StreamTag::kPilot), 1);
      return uniform_box(problem, config.pilot_batch, rng);
    }
  }
  throw ContractError("unknown sampler");
}

std::string describe(const PdeProblem& problem, Scheme scheme, const TrainConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "problem = " << problem.name << "\nscheme = " << sde::scheme_name(scheme) << "\nbatch = " << c.batch
      << "\nsteps = " << c.steps << "\nseed = " << c.seed << "\nN = " << c.time_steps << "\nT = " << c.horizon
      << "\nsampler = " << sampler_name(c.sampler) << "\npoints = " << c.points
      << "\nmilstein_mode = " << milstein_mode_name(c.milstein_mode) << "\nschedule =";
  for (const LrSegment& s : c.schedule) out << ' ' << s.start << ':' << s.lr;
  out << '\n';
  return out.str();
}

}  // namespace

double lr_at(const std::vector<LrSegment>& schedule, int step) {
  if (schedule.empty()) throw ConfigError("learning-rate schedule is empty");
  double lr = schedule.front().lr;
  for (const LrSegment& s : schedule) {
    if (s.start <= step) lr = s.lr;
  }
  return lr;
}

std::vector<LrSegment> long_run_schedule(Scheme scheme) {
  if (scheme == Scheme::kLm) return {{0, 10.0}, {65001, 0.1}};
  return {{0, 10.0}, {1001, 5.0}, {7501, 4.0}, {10001, 3.0}, {20001, 2.0}, {40001, 1.0}, {65001, 0.1}};
}

std::string sampler_name(Sampler sampler) {
  switch (sampler) {
    case Sampler::kFixedPoint:
      return "fixed";
    case Sampler::kPointSet:
      return "points";
    case Sampler::kFreshBox:
      return "box";
  }
  return "unknown";
}

Sampler parse_sampler(const std::string& name) {
  if (name == "fixed") return Sampler::kFixedPoint;
  if (name == "points") return Sampler::kPointSet;
  if (name == "box") return Sampler::kFreshBox;
  throw ConfigError("unknown sampler '" + name + "' (expected fixed, points or box)");
}

void TrainConfig::validate() const {
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (time_steps < 1) throw ConfigError("N must be >= 1");
  if (!(horizon > 0.0)) throw ConfigError("T must be positive");
  if (checkpoint_every < 1) throw ConfigError("checkpoint cadence must be >= 1");
  if (pilot_batch < 1) throw ConfigError("pilot batch must be >= 1");
  if (schedule.empty() || schedule.front().start != 0) {
    throw ConfigError("learning-rate schedule must start at step 0");
  }
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i].lr > 0.0)) throw ConfigError("learning rates must be positive");
    if (i > 0 && schedule[i].start <= schedule[i - 1].start) {
      throw ConfigError("learning-rate segments must have increasing start steps");
    }
  }
  if (sampler == Sampler::kPointSet && points < 1) throw ConfigError("the points sampler needs points >= 1");
}

TrainConfig default_train_config(const PdeProblem& problem) {
  TrainConfig c;
  c.horizon = problem.horizon;
  c.time_steps = problem.default_steps;
  c.steps = problem.default_train_steps;
  c.schedule = {{0, problem.default_lr}};
  return c;
}

void check_compatibility(const PdeProblem& problem, Scheme scheme, std::uint64_t seed) {
  if (scheme == Scheme::kMilstein) sde::require_scheme_support(problem.dynamics, scheme);
  if (scheme == Scheme::kLm) {
    std::mt19937_64 rng = sde::substream(seed, stream_key(StreamTag::kProbes, 16), 0);
    const Matrix probes = uniform_box(problem, 16, rng);
    for (int p = 0; p < probes.rows(); ++p) {
      const double defect = problem.dynamics.diffusion.normality_defect(probes.row(p).transpose(), 0.0);
      if (defect > 1e-9) {
        throw ContractError("LM scheme needs B B^T = B^T B; defect " + std::to_string(defect) + " at probe " +
                            std::to_string(p));
      }
    }
  }
}

Matrix sample_start_points(const PdeProblem& problem, const TrainConfig& config, int step) {
  const Matrix set = config.sampler == Sampler::kPointSet ? point_set(problem, config) : Matrix();
  return start_points_impl(problem, config, step, set);
}

TrainResult train(const PdeProblem& problem, Scheme scheme, const TrainConfig& config) {
  config.validate();
  check_compatibility(problem, scheme, config.seed);
  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count(); };

  const TimeGrid grid(config.horizon, config.time_steps);
  ModelSpec spec;
  spec.dim = problem.dim;
  spec.grid = grid;
  spec.scheme = scheme;
  spec.milstein_mode = config.milstein_mode;
  spec.input_shift = problem.input_shift;
  spec.input_scale = problem.input_scale;

  std::mt19937_64 init_rng = sde::substream(config.seed, stream_key(StreamTag::kNetworkInit), 0);
  TrainResult result{DeepBsdeModel::create(spec, init_rng, config.init), {}};
  DeepBsdeModel& model = result.model;
  ExperimentReport& report = result.report;
  report.problem = problem.name;
  report.scheme = sde::scheme_name(scheme);
  report.seed = config.seed;
  report.config_echo = describe(problem, scheme, config);

  const Matrix set = config.sampler == Sampler::kPointSet ? point_set(problem, config) : Matrix();
  const Vector probe = config.probe.size() > 0 ? config.probe : problem.x0;

  if (config.pilot_init) {
    const Matrix x0 = pilot_points(problem, config, set);
    const sde::PathBatch pilot =
        sde::simulate_batch(problem.dynamics, scheme, x0, grid, config.seed, stream_key(StreamTag::kPilot));
    const double target = terminal_values(pilot, problem).mean();
    const double current = model.predict_g0_batch(x0).mean();
    Mlp& g0 = model.net_g0();
    g0.bias(g0.layer_count() - 1)(0) += target - current;
  }

  nn::Adam adam(model.params(), config.adam);
  DeepBsdeModel last_good = model;

  auto abort = [&](const std::string& why, int step) {
    auto partial = std::make_shared<TrainResult>(TrainResult{last_good, report});
    partial->report.wall_s = elapsed();
    if (!partial->report.curve.empty()) partial->report.final_estimate = partial->report.curve.back().g0_probe;
    throw TrainingAborted("training diverged at step " + std::to_string(step) + ": " + why, step,
                          std::move(partial));
  };

  for (int step = 0; step < config.steps; ++step) {
    const Matrix x0 = start_points_impl(problem, config, step, set);
    sde::PathBatch paths;
    try {
      paths = sde::simulate_batch(problem.dynamics, scheme, x0, grid, config.seed,
                                  stream_key(StreamTag::kIncrements, static_cast<std::uint64_t>(step)));
    } catch (const BlowUpError& e) {
      abort(e.what(), step);
    }
    model.zero_grad();
    nn::Tape tape;
    const nn::Tape::Var loss_var = record_loss(tape, model, paths, problem);
    const double loss_value = tape.value(loss_var)(0, 0);
    if (!std::isfinite(loss_value)) abort("loss is not finite", step);
    tape.backward(loss_var);
    const double lr = lr_at(config.schedule, step);
    try {
      adam.step(lr);
    } catch (const NonFiniteGradient& e) {
      abort(e.what(), step);
    }

    const int done = step + 1;
    if (done % config.checkpoint_every == 0 || done == config.steps) {
      const double g0 = model.predict_g0(probe);
      if (!std::isfinite(g0)) abort("g0 prediction is not finite", step);
      report.curve.push_back({done, loss_value, g0, lr, elapsed()});
      last_good = model;
    }
  }
  report.final_estimate = model.predict_g0(probe);
  report.wall_s = elapsed();
  return result;
}

RepeatSummary summarize(const std::vector<double>& values) {
  RepeatSummary s;
  s.values = values;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
    s.sem = s.std / std::sqrt(n);
  }
  return s;
}

std::vector<TrainResult> train_seeds(const PdeProblem& problem, Scheme scheme, const TrainConfig& config,
                                     int repeats, int jobs) {
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1, got " + std::to_string(jobs));
  std::vector<std::optional<TrainResult>> slots(repeats);
  std::vector<std::exception_ptr> failures(repeats);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < repeats; k = next++) {
      TrainConfig c = config;
      c.seed = config.seed + static_cast<std::uint64_t>(k);
      try {
        slots[k] = train(problem, scheme, c);
      } catch (...) {
        failures[k] = std::current_exception();
      }
    }
  };
  const int threads = std::min(jobs, repeats);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : failures) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<TrainResult> out;
  out.reserve(repeats);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

RepeatSummary train_repeats(const PdeProblem& problem, Scheme scheme, const TrainConfig& config, int repeats,
                            std::vector<ExperimentReport>* reports, int jobs) {
  std::vector<double> values;
  for (TrainResult& r : train_seeds(problem, scheme, config, repeats, jobs)) {
    values.push_back(r.report.final_estimate);
    if (reports) reports->push_back(std::move(r.report));
  }
  return summarize(values);
}

void write_curve_csv(const ExperimentReport& report, std::ostream& out) {
  out << "step,loss,g0_probe,lr,wall_s\n";
  out.precision(17);
  for (const Checkpoint& c : report.curve) {
    out << c.step << ',' << c.loss << ',' << c.g0_probe << ',' << c.lr << ',' << c.wall_s << '\n';
  }
}

}  // namespace kolmo::bsde
