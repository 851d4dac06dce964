#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "kolmo/bsde/model.hpp"
#include "kolmo/nn/adam.hpp"
#include "kolmo/problems/pde_problem.hpp"
#include "kolmo/util/errors.hpp"

namespace kolmo::bsde {

using problems::PdeProblem;

/// Learning rate `lr` applies from training step `start` (0-based) until the next segment.
struct LrSegment {
  int start = 0;
  double lr = 0.008;
};

double lr_at(const std::vector<LrSegment>& schedule, int step);

/// The stepwise schedule used for the long bs_default runs (10 down to 0.1).
std::vector<LrSegment> long_run_schedule(Scheme scheme);

enum class Sampler {
  kFixedPoint,  // every path starts at TrainConfig::start_point
  kPointSet,    // P points drawn once from the box, cycled through in order
  kFreshBox,    // new uniform box points every step
};

std::string sampler_name(Sampler sampler);
Sampler parse_sampler(const std::string& name);

struct TrainConfig {
  int batch = 64;
  int steps = 6000;
  std::vector<LrSegment> schedule{{0, 0.008}};
  std::uint64_t seed = 1;
  int time_steps = 40;
  double horizon = 1.0;
  Sampler sampler = Sampler::kFixedPoint;
  int points = 0;                // P for kPointSet
  Vector start_point;            // empty: the problem's x0
  Vector probe;                  // g0 is logged here; empty: the problem's x0
  MilsteinMode milstein_mode = MilsteinMode::kExplicit;
  int checkpoint_every = 100;
  nn::InitScaling init = nn::InitScaling::kFanIn;
  // Sets g0's output bias so the initial prediction matches the mean of
  // phi(Y^N) over a pilot batch.
  bool pilot_init = true;
  int pilot_batch = 256;
  nn::AdamConfig adam;

  /// Throws ConfigError on an invalid combination.
  void validate() const;
};

/// Config with the problem's horizon, step count, learning rate and budget.
TrainConfig default_train_config(const PdeProblem& problem);

struct Checkpoint {
  int step = 0;
  double loss = 0.0;
  double g0_probe = 0.0;
  double lr = 0.0;
  double wall_s = 0.0;
};

struct ExperimentReport {
  std::string problem;
  std::string scheme;
  std::uint64_t seed = 0;
  std::vector<Checkpoint> curve;
  double final_estimate = 0.0;
  double wall_s = 0.0;
  std::string config_echo;
};

struct TrainResult {
  DeepBsdeModel model;
  ExperimentReport report;
};

/// Thrown by train() when the loss or a gradient becomes non-finite. Holds the
/// model from the last finite checkpoint and the curve up to that point.
class TrainingAborted : public TrainingDiverged {
 public:
  TrainingAborted(const std::string& what, int step, std::shared_ptr<TrainResult> partial)
      : TrainingDiverged(what, step), partial_(std::move(partial)) {}
  const TrainResult& partial() const { return *partial_; }

 private:
  std::shared_ptr<TrainResult> partial_;
};

/// Throws unless `scheme` can be used for `problem`: Milstein needs dB and
/// the commutative flag, LM needs |B B^T - B^T B| <= 1e-9 at 16 box probes.
void check_compatibility(const PdeProblem& problem, Scheme scheme, std::uint64_t seed = 1);

/// Initial points for training step `step`.
Matrix sample_start_points(const PdeProblem& problem, const TrainConfig& config, int step);

TrainResult train(const PdeProblem& problem, Scheme scheme, const TrainConfig& config);

struct RepeatSummary {
  std::vector<double> values;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  double sem = 0.0;
};

RepeatSummary summarize(const std::vector<double>& values);

/// Trains with seeds seed, seed + 1, ..., seed + repeats - 1, up to `jobs` at
/// a time. Results are in seed order and do not depend on `jobs`.
std::vector<TrainResult> train_seeds(const PdeProblem& problem, Scheme scheme, const TrainConfig& config,
                                     int repeats, int jobs = 1);

/// Summary of the final estimates of train_seeds.
RepeatSummary train_repeats(const PdeProblem& problem, Scheme scheme, const TrainConfig& config, int repeats,
                            std::vector<ExperimentReport>* reports = nullptr, int jobs = 1);

/// Header `step,loss,g0_probe,lr,wall_s`.
void write_curve_csv(const ExperimentReport& report, std::ostream& out);

}  // namespace kolmo::bsde
