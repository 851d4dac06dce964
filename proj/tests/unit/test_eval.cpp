#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "kolmo/eval/convergence.hpp"
#include "kolmo/eval/metrics.hpp"
#include "kolmo/eval/oracles.hpp"
#include "kolmo/eval/sweeps.hpp"
#include "kolmo/problems/registry.hpp"
#include "kolmo/util/errors.hpp"

namespace kolmo::eval {
namespace {

TEST(Metrics, IdentityAndUniformInflation) {
  const Matrix probes = uniform_probes(200, 3, 0.0, 1.0, 1);
  auto exact = [](const Vector& x) { return 1.0 + x.squaredNorm(); };
  EXPECT_EQ(avg_relative_error(exact, exact, probes).mean, 0.0);
  auto inflated = [&](const Vector& x) { return 1.1 * exact(x); };
  EXPECT_NEAR(avg_relative_error(inflated, exact, probes).mean, 0.1, 1e-12);
  EXPECT_EQ(avg_relative_error(inflated, exact, probes).probes, 200);
}

TEST(Metrics, ZeroExactProbesAreRejected) {
  Vector exact(3);
  exact << 1.0, 0.0, 2.0;
  Vector pred(3);
  pred << 1.5, 3.0, 2.0;
  const ErrorSummary s = avg_relative_error(pred, exact);
  EXPECT_EQ(s.rejected, 1);
  EXPECT_EQ(s.probes, 2);
  EXPECT_DOUBLE_EQ(s.mean, 0.25);
  EXPECT_FALSE(s.warnings.empty());
}

TEST(Metrics, PermutationInvariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  Vector a(50);
  Vector b(50);
  for (int i = 0; i < 50; ++i) {
    a(i) = u(rng);
    b(i) = u(rng);
  }
  std::vector<int> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Vector pa(50);
  Vector pb(50);
  for (int i = 0; i < 50; ++i) {
    pa(i) = a(perm[i]);
    pb(i) = b(perm[i]);
  }
  EXPECT_NEAR(avg_relative_error(a, b).mean, avg_relative_error(pa, pb).mean, 1e-15);
}

TEST(Metrics, ProbeFluctuationScalesAsInverseRootM) {
  auto exact = [](const Vector& x) { return 1.0 + x.sum(); };
  auto pred = [](const Vector& x) { return (1.0 + x.sum()) * (1.0 + 0.2 * x(0)); };
  auto spread = [&](int m) {
    std::vector<double> means;
    for (std::uint64_t s = 0; s < 40; ++s) means.push_back(avg_relative_error(pred, exact, uniform_probes(m, 2, 0, 1, s)).mean);
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) / means.size();
    double ss = 0.0;
    for (double v : means) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (means.size() - 1));
  };
  const double ratio = spread(100) / spread(1600);
  EXPECT_GT(ratio, 2.5);
  EXPECT_LT(ratio, 6.5);
}

TEST(Metrics, UniformProbesInBoxAndDeterministic) {
  const Matrix p = uniform_probes(100, 4, -2.0, 3.0, 8);
  EXPECT_GE(p.minCoeff(), -2.0);
  EXPECT_LE(p.maxCoeff(), 3.0);
  EXPECT_TRUE(p == uniform_probes(100, 4, -2.0, 3.0, 8));
  EXPECT_FALSE(p == uniform_probes(100, 4, -2.0, 3.0, 9));
}

TEST(Fit, RecoversPowerLaw) {
  const std::vector<double> x = {2, 4, 6, 8, 10};
  std::vector<double> y;
  for (double v : x) y.push_back(0.2 * std::pow(v, 1.78));
  const ScalingFit f = fit_loglog(x, y);
  EXPECT_NEAR(f.slope, 1.78, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(0.2), 1e-12);
  EXPECT_NEAR(f.resid, 0.0, 1e-12);
  EXPECT_EQ(f.points_used, 5);
  EXPECT_NEAR(f.slope_spread, 0.0, 1e-12);
}

TEST(Fit, Refusals) {
  EXPECT_THROW(fit_loglog({2.0}, {3.0}), FitRefused);
  EXPECT_THROW(fit_loglog({1.0, 2.0}, {1.0, 0.0}), FitRefused);
  EXPECT_THROW(fit_loglog({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, 4), FitRefused);
}

// Explicit finite-difference solve of the one-dimensional HJB equation in
// forward time s = T - t:  g_s = g_xx - lambda g_x^2,  g(x, 0) = ln((1 + x^2) / 2).
double hjb_fd_1d(double x0, double lambda, double horizon) {
  const double half_width = 10.0;
  const double dx = 0.01;
  const int m = static_cast<int>(std::lround(2 * half_width / dx));
  const int steps = static_cast<int>(std::ceil(horizon / (0.4 * dx * dx)));
  const double dt = horizon / steps;
  std::vector<double> g(m + 1);
  std::vector<double> next(m + 1);
  for (int i = 0; i <= m; ++i) {
    const double x = -half_width + i * dx;
    g[i] = std::log((1 + x * x) / 2);
  }
  for (int n = 0; n < steps; ++n) {
    for (int i = 1; i < m; ++i) {
      const double gx = (g[i + 1] - g[i - 1]) / (2 * dx);
      const double gxx = (g[i + 1] - 2 * g[i] + g[i - 1]) / (dx * dx);
      next[i] = g[i] + dt * (gxx - lambda * gx * gx);
    }
    next[0] = 2 * next[1] - next[2];
    next[m] = 2 * next[m - 1] - next[m - 2];
    std::swap(g, next);
  }
  const double pos = (x0 + half_width) / dx;
  const int i = static_cast<int>(pos);
  const double w = pos - i;
  return (1 - w) * g[i] + w * g[i + 1];
}

TEST(HjbReference, TerminalTimeIsPhi) {
  Vector x(3);
  x << 0.5, -1.0, 2.0;
  const McEstimate e = hjb_reference(x, 1.0, 1.0, 1.0, 100, 1);
  EXPECT_NEAR(e.value, std::log((1 + x.squaredNorm()) / 2), 1e-14);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(HjbReference, MatchesOneDimensionalPdeSolve) {
  for (double x0 : {0.0, 0.7}) {
    for (double lambda : {1.0, 0.5}) {
      const double fd = hjb_fd_1d(x0, lambda, 1.0);
      const McEstimate mc = hjb_reference(Vector::Constant(1, x0), lambda, 1.0, 0.0, 1000000, 11);
      EXPECT_NEAR(mc.value, fd, 1e-3 + 3 * mc.std_error) << "x0 " << x0 << " lambda " << lambda;
      EXPECT_LT(mc.std_error, 1e-3);
    }
  }
}

TEST(HjbReference, StandardErrorShrinksAsRootN) {
  std::vector<double> n;
  std::vector<double> se;
  for (long k : {1000L, 10000L, 100000L}) {
    n.push_back(static_cast<double>(k));
    se.push_back(hjb_reference(Vector::Zero(5), 1.0, 1.0, 0.0, k, 4).std_error);
  }
  EXPECT_NEAR(fit_loglog(n, se).slope, -0.5, 0.1);
}

TEST(StrongOrder, EmAndMilsteinSlopes) {
  const Gbm1d gbm;
  const std::vector<double> taus = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
  EXPECT_NEAR(strong_order_fit(gbm, sde::Scheme::kEm, taus, 4000, 1).fit.slope, 0.5, 0.15);
  EXPECT_NEAR(strong_order_fit(gbm, sde::Scheme::kMilstein, taus, 4000, 1).fit.slope, 1.0, 0.15);
}

TEST(StrongOrder, PathsAreCoupled) {
  Gbm1d gbm;
  gbm.sigma = 0.5;
  const CoupledEndpoints e = coupled_endpoints(gbm, sde::Scheme::kMilstein, 1.0 / 4096, 200, 3);
  double spread = 0.0;
  double worst = 0.0;
  for (std::size_t p = 0; p < e.exact.size(); ++p) {
    spread = std::max(spread, std::abs(e.exact[p] - 1.0));
    worst = std::max(worst, std::abs(e.exact[p] - e.discrete[p]));
  }
  EXPECT_GT(spread, 0.3);
  EXPECT_LT(worst, 1e-2);

  Gbm1d still;
  still.mu = 0.0;
  still.sigma = 0.0;
  const CoupledEndpoints z = coupled_endpoints(still, sde::Scheme::kEm, 0.125, 10, 3);
  EXPECT_EQ(z.exact, z.discrete);
}

TEST(StrongOrder, Refusals) {
  const Gbm1d gbm;
  EXPECT_THROW(strong_order_fit(gbm, sde::Scheme::kEm, {0.5, 0.25}, 100, 1), FitRefused);
  Gbm1d still;
  still.mu = 0.0;
  still.sigma = 0.0;
  EXPECT_THROW(strong_order_fit(still, sde::Scheme::kEm, {0.5, 0.25, 0.125}, 100, 1), FitRefused);
  EXPECT_THROW(coupled_endpoints(gbm, sde::Scheme::kEm, 0.3, 10, 1), InvalidGrid);
  EXPECT_THROW(coupled_endpoints(gbm, sde::Scheme::kLm, 0.25, 10, 1), ContractError);
}

sde::Dynamics ou_dynamics() {
  sde::Dynamics dyn;
  dyn.dim = 1;
  dyn.drift = [](const Vector& x, double) { return (-x).eval(); };
  dyn.diffusion = sde::Diffusion::diagonal(
      1, [](int, double, double) { return std::sqrt(2.0); }, [](int, double, double) { return 0.0; });
  return dyn;
}

TEST(Stationary, RecursionMatchesLibrarySteppers) {
  const sde::Dynamics dyn = ou_dynamics();
  const double tau = 0.1;
  const double noise = std::sqrt(2.0 * tau);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  double x_em = 0.3;
  double x_lm = 0.3;
  Vector y_em = Vector::Constant(1, 0.3);
  Vector y_lm = Vector::Constant(1, 0.3);
  double xi = normal(rng);
  for (int n = 0; n < 50; ++n) {
    const double xi_next = normal(rng);
    x_em = x_em - x_em * tau + noise * xi;
    x_lm = x_lm - x_lm * tau + 0.5 * noise * (xi + xi_next);
    y_em = sde::em_step(dyn, y_em, 0.0, tau, Vector::Constant(1, std::sqrt(tau) * xi), n);
    y_lm = sde::lm_step(dyn, y_lm, 0.0, tau, Vector::Constant(1, std::sqrt(tau) * xi),
                        Vector::Constant(1, std::sqrt(tau) * xi_next), n);
    xi = xi_next;
  }
  EXPECT_NEAR(x_em, y_em(0), 1e-12);
  EXPECT_NEAR(x_lm, y_lm(0), 1e-12);
}

TEST(Stationary, VariancesMatchClosedForms) {
  // EM on dx = -x dt + sqrt(2) dW: x' = (1 - tau) x + sqrt(2 tau) xi has variance 2 / (2 - tau).
  // LM: x' = (1 - tau) x + sqrt(tau / 2) (xi + xi') has variance exactly 1.
  StationaryConfig c;
  c.n_steps = 20000;
  c.burn_in = 500;
  c.chains = 40;
  const StationaryFit f = lm_stationary_fit({0.4, 0.2}, c, 3);
  ASSERT_EQ(f.em_points.size(), 2u);
  for (const StationaryPoint& p : f.em_points) {
    EXPECT_NEAR(p.variance, 2.0 / (2.0 - p.tau), 4 * p.std_error) << p.tau;
    EXPECT_FALSE(p.dropped);
  }
  for (const StationaryPoint& p : f.lm_points) EXPECT_NEAR(p.variance, 1.0, 4 * p.std_error) << p.tau;
  EXPECT_FALSE(f.em_fit.has_value());
  EXPECT_FALSE(f.em_refusal.empty());
}

TEST(Stationary, BurnInMustFitInsideChain) {
  StationaryConfig c;
  c.n_steps = 100;
  c.burn_in = 100;
  EXPECT_THROW(lm_stationary_fit({0.1, 0.05, 0.02}, c, 1), ConfigError);
}

SweepConfig small_sweep_config() {
  SweepConfig c;
  c.train.steps = 30;
  c.train.time_steps = 4;
  c.train.batch = 8;
  c.probes = 50;
  return c;
}

ProblemFactory heat_factory() {
  return [](int d) { return problems::build_problem("heat", {{"d", d}, {"N", 4}}); };
}

TEST(Sweep, SingleDimensionFitRefused) {
  SweepConfig c = small_sweep_config();
  const SweepResult r = complexity_sweep(heat_factory(), sde::Scheme::kEm, {2}, {4}, 10.0, c);
  ASSERT_EQ(r.p_star.size(), 1u);
  EXPECT_EQ(r.p_star[0], 4);
  EXPECT_FALSE(r.fit.has_value());
  EXPECT_FALSE(r.fit_refusal.empty());
}

TEST(Sweep, UnreachableTargetIsCensored) {
  SweepConfig c = small_sweep_config();
  const SweepResult r = complexity_sweep(heat_factory(), sde::Scheme::kEm, {2, 3}, {2, 4}, 1e-9, c, 2);
  EXPECT_EQ(r.censored_dims, (std::vector<int>{2, 3}));
  EXPECT_EQ(r.p_star, (std::vector<int>{0, 0}));
  ASSERT_EQ(r.rows.size(), 4u);
  for (const SweepRow& row : r.rows) EXPECT_TRUE(row.censored);
  EXPECT_EQ(r.rows[0].d, 2);
  EXPECT_EQ(r.rows[3].d, 3);
  EXPECT_FALSE(r.fit.has_value());
}

TEST(Sweep, JobsDoNotChangeResults) {
  SweepConfig c = small_sweep_config();
  const SweepResult a = complexity_sweep(heat_factory(), sde::Scheme::kEm, {2, 3}, {2, 4}, 0.5, c, 1);
  const SweepResult b = complexity_sweep(heat_factory(), sde::Scheme::kEm, {2, 3}, {2, 4}, 0.5, c, 2);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) EXPECT_EQ(a.rows[k].eps_mean, b.rows[k].eps_mean);
}

TEST(Sweep, NeedsExactOrReference) {
  SweepConfig c = small_sweep_config();
  const ProblemFactory factory = [](int d) { return problems::build_problem("allen_cahn", {{"d", d}}); };
  EXPECT_THROW(complexity_sweep(factory, sde::Scheme::kEm, {2}, {4}, 0.1, c), ContractError);
}

TEST(WallTime, SingleDimensionRefusedAndStepsScaleLinearly) {
  bsde::TrainConfig c;
  c.time_steps = 4;
  c.batch = 32;
  c.points = 64;
  c.steps = 150;
  const WallTimeResult one = wall_time_scaling({heat_factory()}, {"heat"}, {4}, c);
  EXPECT_FALSE(one.fit.has_value());
  EXPECT_FALSE(one.fit_refusal.empty());
  c.steps = 300;
  const WallTimeResult two = wall_time_scaling({heat_factory()}, {"heat"}, {4}, c);
  const double ratio = two.rows[0].wall_s / one.rows[0].wall_s;
  EXPECT_GT(ratio, 1.3);
  EXPECT_LT(ratio, 3.0);
  EXPECT_THROW(wall_time_scaling({heat_factory()}, {"a", "b"}, {2}, c), ConfigError);
}

}  // namespace
}  // namespace kolmo::eval
