#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "kolmo/bsde/train.hpp"
#include "kolmo/eval/metrics.hpp"
#include "kolmo/nn/mlp.hpp"
#include "kolmo/problems/pde_problem.hpp"

namespace kolmo::linear_fk {

using eval::McEstimate;
using nn::Matrix;
using nn::Mlp;
using nn::Vector;
using problems::PdeProblem;

struct LinearFkConfig {
  double lo = 0.0;
  double hi = 1.0;
  sde::Scheme scheme = sde::Scheme::kEm;
  int time_steps = 40;
  double horizon = 1.0;
  int steps = 10000;
  std::vector<bsde::LrSegment> schedule{{0, 0.001}};
  int batch = 64;
  std::uint64_t seed = 1;
  int checkpoint_every = 100;
  nn::InitScaling init = nn::InitScaling::kFanIn;
  bool pilot_init = true;

  void validate() const;
};

/// Box, grid and budget taken from the problem defaults.
LinearFkConfig default_linear_config(const PdeProblem& problem);

/// One network approximating x -> g(x, 0) = E[phi(X_T) | X_0 = x].
struct LinearModel {
  Mlp net;
  double input_shift = 0.0;
  double input_scale = 1.0;

  double predict(const Vector& x) const;
  Vector predict_batch(const Matrix& x) const;
};

/// "kolmo-linear 1" header with the input scaling in hexfloat, then the network.
std::string serialize_linear_model(const LinearModel& model);
LinearModel deserialize_linear_model(const std::string& text);

struct LinearResult {
  LinearModel model;
  bsde::ExperimentReport report;
};

/// Regresses phi(X_T) on uniformly drawn starting points x in [lo, hi]^d with
/// fresh paths every step. Throws ContractError when f is not identically zero.
LinearResult train_linear(const PdeProblem& problem, const LinearFkConfig& config);

struct GbmParams {
  double r = 0.05;
  double mu = -0.05;
  std::vector<double> sigma;
  double horizon = 1.0;
  // Terminal payoff psi; defaults to exp(-r T) max(max_i x_i - 100, 0).
  std::function<double(const Vector&)> payoff;
  // Drive every coordinate with the same Brownian motion instead of independent ones.
  bool shared_noise = false;

  /// r = 1/20, mu = r - 1/10, sigma_i = 1/10 + i/200, T = 1 in dimension d.
  static GbmParams standard(int d);
  /// Parameters matching a registry "gbm" problem, including its r, strike and horizon.
  static GbmParams from_problem(const PdeProblem& problem);
  double evaluate_payoff(const Vector& x) const;
};

/// Monte-Carlo estimate of E[psi(x_i exp(sigma_i W_i(T - t) + (mu - sigma_i^2 / 2)(T - t)))].
McEstimate gbm_reference(const Vector& x, double t, const GbmParams& params, long n_mc, std::uint64_t seed);

/// 64-bit FNV-1a, used to key cached reference values.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t hash = 0xcbf29ce484222325ULL);

/// Reference values at probe rows, cached under `cache_dir` by
/// (problem key, probe hash, n_mc, seed). An empty cache_dir disables caching.
std::vector<double> cached_references(const std::filesystem::path& cache_dir, const std::string& problem_key,
                                      const Matrix& probes, long n_mc, std::uint64_t seed,
                                      const std::function<double(const Vector&, std::uint64_t)>& compute);

}  // namespace kolmo::linear_fk
