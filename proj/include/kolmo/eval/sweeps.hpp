#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kolmo/bsde/train.hpp"
#include "kolmo/eval/metrics.hpp"
#include "kolmo/problems/pde_problem.hpp"

namespace kolmo::eval {

using ProblemFactory = std::function<problems::PdeProblem(int d)>;
// Reference g(x, 0) at every probe row.
using ReferenceFn = std::function<Vector(const problems::PdeProblem&, const Matrix& probes)>;

/// Reference from the problem's exact solution at t = 0.
Vector exact_reference(const problems::PdeProblem& problem, const Matrix& probes);

struct SweepRow {
  int d = 0;
  int points = 0;
  double eps_mean = 0.0;
  double eps_std = 0.0;
  std::uint64_t seed = 0;
  double wall_s = 0.0;
  bool censored = false;
};

struct SweepConfig {
  bsde::TrainConfig train;  // sampler is forced to the P-point set
  int probes = 10000;
  int repeats = 1;
  ReferenceFn reference = exact_reference;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<int> dims;
  std::vector<int> p_star;  // 0 where censored
  std::vector<int> censored_dims;
  std::optional<ScalingFit> fit;
  std::string fit_refusal;
};

/// <eps> of a model trained on P points, evaluated on `probes` uniform points of the box.
SweepRow sweep_cell(const problems::PdeProblem& problem, sde::Scheme scheme, int points, const SweepConfig& config);

/// For each d, trains at increasing P until <eps> < eps_target. Dimensions
/// where the target is never reached are censored and left out of the log P*
/// versus log d fit. A fit with fewer than two points is refused. Up to
/// `jobs` dimensions run concurrently; rows come back in `dims` order either way.
SweepResult complexity_sweep(const ProblemFactory& factory, sde::Scheme scheme, const std::vector<int>& dims,
                             const std::vector<int>& point_counts, double eps_target, const SweepConfig& config,
                             int jobs = 1);

/// Header `d,P,eps_mean,eps_std,seed,wall_s,censored`.
void write_sweep_csv(const SweepResult& result, std::ostream& out);

struct WallTimeRow {
  std::string problem;
  int d = 0;
  double wall_s = 0.0;
};

struct WallTimeResult {
  std::vector<WallTimeRow> rows;
  std::optional<ScalingFit> fit;
  std::string fit_refusal;
};

/// Trains each (problem, d) once with the EM scheme on a P-point set and fits
/// log wall time against log d over all rows.
WallTimeResult wall_time_scaling(const std::vector<ProblemFactory>& factories,
                                 const std::vector<std::string>& names, const std::vector<int>& dims,
                                 const bsde::TrainConfig& config);

}  // namespace kolmo::eval
