#include "kolmo/eval/convergence.hpp"

#include <cmath>
#include <random>

#include "kolmo/sde/random.hpp"
#include "kolmo/util/errors.hpp"

namespace kolmo::eval {

sde::Dynamics Gbm1d::dynamics() const {
  sde::Dynamics dyn;
  dyn.dim = 1;
  const double m = mu;
  const double s = sigma;
  dyn.drift = [m](const Vector& x, double) { return (m * x).eval(); };
  dyn.diffusion = sde::Diffusion::diagonal(
      1, [s](int, double xi, double) { return s * xi; }, [s](int, double, double) { return s; });
  return dyn;
}

CoupledEndpoints coupled_endpoints(const Gbm1d& gbm, sde::Scheme scheme, double tau, int n_paths,
                                   std::uint64_t seed) {
  if (scheme == sde::Scheme::kLm) throw ContractError("strong order is measured for em and milstein only");
  const int steps = static_cast<int>(std::lround(gbm.horizon / tau));
  if (steps < 1 || std::abs(steps * tau - gbm.horizon) > 1e-12 * gbm.horizon) {
    throw InvalidGrid("tau must divide the horizon");
  }
  const sde::Dynamics dyn = gbm.dynamics();
  CoupledEndpoints out;
  out.exact.reserve(n_paths);
  out.discrete.reserve(n_paths);
  const double sd = std::sqrt(tau);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector y(1);
  Vector dw(1);
  for (int p = 0; p < n_paths; ++p) {
    std::mt19937_64 rng = sde::substream(seed, sde::stream_key(sde::StreamTag::kIncrements, steps), p);
    y(0) = gbm.x0;
    double w = 0.0;
    for (int n = 0; n < steps; ++n) {
      dw(0) = sd * normal(rng);
      w += dw(0);
      const double t = n * tau;
      y = scheme == sde::Scheme::kEm ? sde::em_step(dyn, y, t, tau, dw, n) : sde::milstein_step(dyn, y, t, tau, dw, n);
    }
    out.discrete.push_back(y(0));
    out.exact.push_back(gbm.x0 *
                        std::exp((gbm.mu - 0.5 * gbm.sigma * gbm.sigma) * gbm.horizon + gbm.sigma * w));
  }
  return out;
}

StrongOrderResult strong_order_fit(const Gbm1d& gbm, sde::Scheme scheme, const std::vector<double>& taus,
                                   int n_paths, std::uint64_t seed) {
  if (taus.size() < 3) throw FitRefused("strong order fit needs at least 3 step sizes");
  StrongOrderResult result;
  std::vector<std::string> warnings;
  for (double tau : taus) {
    const CoupledEndpoints e = coupled_endpoints(gbm, scheme, tau, n_paths, seed);
    double ss = 0.0;
    for (std::size_t p = 0; p < e.exact.size(); ++p) ss += (e.exact[p] - e.discrete[p]) * (e.exact[p] - e.discrete[p]);
    const double rms = std::sqrt(ss / static_cast<double>(e.exact.size()));
    if (!(rms > 1e-13 * std::max(1.0, std::abs(gbm.x0)))) {
      warnings.push_back("tau " + std::to_string(tau) + ": error at machine scale, point dropped");
      continue;
    }
    result.taus.push_back(tau);
    result.rms_errors.push_back(rms);
  }
  if (result.taus.size() < 3) {
    std::string why = "strong order fit refused: fewer than 3 usable step sizes";
    for (const std::string& w : warnings) why += "; " + w;
    throw FitRefused(why);
  }
  result.fit = fit_loglog(result.taus, result.rms_errors, 3);
  result.fit.warnings = warnings;
  return result;
}

namespace {

// Per-chain time averages of x^2 after burn-in, started from x = 0.
StationaryPoint stationary_point(double tau, bool lm, const StationaryConfig& c, std::uint64_t seed, int tau_index) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double noise = std::sqrt(2.0 * tau);
  std::vector<double> chain_var(c.chains);
  for (int k = 0; k < c.chains; ++k) {
    std::mt19937_64 rng =
        sde::substream(seed, sde::stream_key(sde::StreamTag::kIncrements, static_cast<std::uint64_t>(tau_index)), k);
    double x = 0.0;
    double xi = normal(rng);
    double acc = 0.0;
    for (int n = 0; n < c.n_steps; ++n) {
      const double xi_next = normal(rng);
      // dW^n = sqrt(tau) xi; LM averages consecutive increments
      x = lm ? x - x * tau + 0.5 * noise * (xi + xi_next) : x - x * tau + noise * xi;
      xi = xi_next;
      if (n >= c.burn_in) acc += x * x;
    }
    chain_var[k] = acc / (c.n_steps - c.burn_in);
  }
  StationaryPoint pt;
  pt.tau = tau;
  double mean = 0.0;
  for (double v : chain_var) mean += v;
  mean /= c.chains;
  double ss = 0.0;
  for (double v : chain_var) ss += (v - mean) * (v - mean);
  pt.variance = mean;
  pt.error = std::abs(mean - 1.0);
  pt.std_error = c.chains > 1 ? std::sqrt(ss / (c.chains - 1.0) / c.chains) : 0.0;
  pt.dropped = pt.error < c.noise_factor * pt.std_error;
  return pt;
}

void fit_points(const std::vector<StationaryPoint>& pts, const std::string& label, std::optional<ScalingFit>& fit,
                std::string& refusal, std::vector<std::string>& warnings) {
  std::vector<double> x;
  std::vector<double> y;
  for (const StationaryPoint& p : pts) {
    if (p.dropped) {
      warnings.push_back(label + " tau " + std::to_string(p.tau) + ": variance error " + std::to_string(p.error) +
                         " below the noise floor " + std::to_string(p.std_error) + ", point dropped");
      continue;
    }
    x.push_back(p.tau);
    y.push_back(p.error);
  }
  try {
    fit = fit_loglog(x, y, 3);
  } catch (const FitRefused& e) {
    refusal = e.what();
  }
}

}  // namespace

StationaryFit lm_stationary_fit(const std::vector<double>& taus, const StationaryConfig& config,
                                std::uint64_t seed) {
  if (config.burn_in >= config.n_steps) {
    throw ConfigError("burn-in (" + std::to_string(config.burn_in) + ") must be smaller than n_steps (" +
                      std::to_string(config.n_steps) + ")");
  }
  if (config.chains < 2) throw ConfigError("stationary fit needs at least 2 chains");
  StationaryFit out;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0.0 && taus[i] < 1.0)) throw InvalidGrid("stationary fit needs 0 < tau < 1");
    out.lm_points.push_back(stationary_point(taus[i], true, config, seed, static_cast<int>(i)));
    out.em_points.push_back(stationary_point(taus[i], false, config, seed, static_cast<int>(i)));
  }
  fit_points(out.lm_points, "lm", out.lm_fit, out.lm_refusal, out.warnings);
  fit_points(out.em_points, "em", out.em_fit, out.em_refusal, out.warnings);
  return out;
}

}  // namespace kolmo::eval
