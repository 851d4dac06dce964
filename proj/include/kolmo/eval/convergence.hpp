#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kolmo/eval/metrics.hpp"
#include "kolmo/sde/steppers.hpp"

namespace kolmo::eval {

/// dX = mu X dt + sigma X dW in one dimension, whose path solution is known.
struct Gbm1d {
  double mu = 0.05;
  double sigma = 0.2;
  double x0 = 1.0;
  double horizon = 1.0;

  sde::Dynamics dynamics() const;
};

struct CoupledEndpoints {
  std::vector<double> exact;
  std::vector<double> discrete;
};

/// Endpoints of the exact solution and of `scheme` driven by the same
/// Brownian increments, one pair per path.
CoupledEndpoints coupled_endpoints(const Gbm1d& gbm, sde::Scheme scheme, double tau, int n_paths,
                                   std::uint64_t seed);

struct StrongOrderResult {
  std::vector<double> taus;
  std::vector<double> rms_errors;
  ScalingFit fit;
};

/// RMS endpoint error per tau and the log-log slope. Errors below 1e-13 are
/// treated as degenerate; fewer than 3 usable points throws FitRefused.
StrongOrderResult strong_order_fit(const Gbm1d& gbm, sde::Scheme scheme, const std::vector<double>& taus,
                                   int n_paths, std::uint64_t seed);

struct StationaryPoint {
  double tau = 0.0;
  double variance = 0.0;
  double error = 0.0;      // |variance - 1|
  double std_error = 0.0;  // spread of the per-chain estimates
  bool dropped = false;    // error indistinguishable from noise
};

struct StationaryFit {
  std::vector<StationaryPoint> lm_points;
  std::vector<StationaryPoint> em_points;
  std::optional<ScalingFit> lm_fit;
  std::optional<ScalingFit> em_fit;
  std::string lm_refusal;
  std::string em_refusal;
  std::vector<std::string> warnings;
};

struct StationaryConfig {
  int n_steps = 100000;  // per chain, including burn-in
  int burn_in = 2000;
  int chains = 100;
  // A point is dropped when its error is below noise_factor standard errors.
  double noise_factor = 2.0;
};

/// Long-run variance of dx = -x dt + sqrt(2) dW under LM and EM per tau, and
/// slopes of |variance - 1| against tau. A fit with fewer than 3 surviving
/// points is left empty and its refusal reason recorded.
StationaryFit lm_stationary_fit(const std::vector<double>& taus, const StationaryConfig& config,
                                std::uint64_t seed);

}  // namespace kolmo::eval
