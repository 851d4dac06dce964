#include <gtest/gtest.h>

#include <cmath>

#include "kolmo/bsde/train.hpp"
#include "kolmo/problems/registry.hpp"
#include "kolmo/util/errors.hpp"

namespace kolmo::problems {
namespace {

// -(1/lambda) ln E[exp(-lambda phi(x + sqrt(2) W_s))] in d = 1 by trapezoidal
// quadrature against the Gaussian density, s = T - t.
double hjb_quadrature_1d(double x, double lambda, double s) {
  if (s <= 0.0) return std::log((1.0 + x * x) / 2.0);
  const double sd = std::sqrt(2.0 * s);
  const int n = 6000;
  const double lim = 12.0;
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double u = -lim + 2.0 * lim * k / n;
    const double y = x + sd * u;
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    acc += w * std::exp(-0.5 * u * u - lambda * std::log((1.0 + y * y) / 2.0));
  }
  acc *= (2.0 * lim / n) / std::sqrt(2.0 * M_PI);
  return -std::log(acc) / lambda;
}

TEST(Registry, NamesInDisplayOrder) {
  EXPECT_EQ(problem_names(), (std::vector<std::string>{"bs_default", "bs_exp", "allen_cahn", "allen_cahn_xdiff",
                                                      "nonlinear_diffusion", "hjb", "hjb_xdiff", "heat", "gbm"}));
  for (const std::string& name : problem_names()) {
    const PdeProblem p = build_problem(name);
    EXPECT_EQ(p.name, name);
    EXPECT_EQ(p.x0.size(), p.dim);
    EXPECT_LT(p.domain_lo, p.domain_hi);
  }
}

TEST(Registry, UnknownNameListsValidOptions) {
  try {
    build_problem("black_scholes");
    FAIL();
  } catch (const RegistryError& e) {
    EXPECT_NE(std::string(e.what()).find("bs_exp"), std::string::npos);
  }
}

TEST(Registry, UnknownOverrideListsValidKeys) {
  try {
    build_problem("heat", {{"sigma", 1.0}});
    FAIL();
  } catch (const RegistryError& e) {
    EXPECT_NE(std::string(e.what()).find("steps"), std::string::npos);
  }
}

TEST(Registry, BsDefaultDefaults) {
  const PdeProblem p = build_problem("bs_default");
  EXPECT_EQ(p.dim, 100);
  EXPECT_EQ(p.horizon, 1.0);
  EXPECT_DOUBLE_EQ(p.params.at("delta"), 2.0 / 3.0);
  EXPECT_EQ(p.params.at("R"), 0.02);
  EXPECT_EQ(p.params.at("mu_bar"), 0.02);
  EXPECT_EQ(p.params.at("sigma_bar"), 0.2);
  EXPECT_EQ(p.params.at("v_h"), 50);
  EXPECT_EQ(p.params.at("v_l"), 70);
  EXPECT_EQ(p.params.at("gamma_h"), 0.2);
  EXPECT_EQ(p.params.at("gamma_l"), 0.02);
  EXPECT_EQ(p.terminal_at(Vector::Constant(100, 100.0)), 100.0);
  Vector x = Vector::Constant(100, 100.0);
  x(37) = 80.0;
  EXPECT_EQ(p.terminal_at(x), 80.0);
  ASSERT_EQ(p.references.size(), 1u);
  EXPECT_EQ(p.references[0].value, 57.300);
}

TEST(Registry, BsDiffusionsCommute) {
  for (const char* name : {"bs_default", "bs_exp"}) {
    const PdeProblem p = build_problem(name, {{"d", 5}});
    std::vector<Vector> probes = {Vector::Constant(5, 50.0), Vector::LinSpaced(5, 90, 110)};
    EXPECT_TRUE(sde::check_commutativity(p.dynamics.diffusion, probes, 1e-9).commutative) << name;
  }
}

TEST(Registry, AllenCahnDefaults) {
  const PdeProblem p = build_problem("allen_cahn");
  EXPECT_EQ(p.dim, 100);
  EXPECT_EQ(p.params.at("epsilon"), 1.0);
  const Vector x = Vector::Constant(100, 0.3);
  EXPECT_TRUE(p.dynamics.drift(x, 0.0).isZero());
  EXPECT_TRUE(p.dynamics.diffusion.matrix(x, 0.0).isApprox(std::sqrt(2.0) * Matrix::Identity(100, 100)));
  EXPECT_NEAR(p.terminal_at(x), 1.0 / (2.0 + 0.4 * 100 * 0.09), 1e-15);
  Vector y(1);
  y << 0.5;
  const Vector f = p.nonlinearity.value(0.0, Matrix::Zero(1, 100), y, Matrix::Ones(1, 100));
  EXPECT_NEAR(f(0), 0.5 - 0.125, 1e-15);
}

TEST(Registry, NonlinearDiffusionDefaults) {
  const PdeProblem p = build_problem("nonlinear_diffusion");
  EXPECT_EQ(p.horizon, 0.01);
  EXPECT_DOUBLE_EQ(p.params.at("D"), 0.25 * 0.25 / 2);
  EXPECT_EQ(p.default_steps, 40);
}

TEST(Registry, ReferencesDroppedWhenEquationChanges) {
  EXPECT_EQ(build_problem("bs_exp", {{"N", 20}}).references.size(), 1u);
  EXPECT_TRUE(build_problem("bs_exp", {{"d", 10}}).references.empty());
  EXPECT_TRUE(build_problem("hjb", {{"lambda", 2}}).references.empty());
}

TEST(DefaultIntensity, Knees) {
  const DefaultIntensityParams q;
  EXPECT_NEAR(default_intensity_q(50.0, q), 0.2, 1e-15);
  EXPECT_NEAR(default_intensity_q(70.0, q), 0.02, 1e-15);
  EXPECT_NEAR(default_intensity_q(100.0, q), 0.02, 1e-15);
  EXPECT_NEAR(default_intensity_q(10.0, q), 0.2, 1e-15);
  EXPECT_NEAR(default_intensity_q(60.0, q), 0.11, 1e-15);
}

TEST(DefaultIntensity, DerivativeMatchesFiniteDifference) {
  const DefaultIntensityParams q;
  for (double y : {30.0, 55.0, 65.0, 90.0}) {
    const double fd = (default_intensity_q(y + 1e-6, q) - default_intensity_q(y - 1e-6, q)) / 2e-6;
    EXPECT_NEAR(default_intensity_q_derivative(y, q), fd, 1e-8);
  }
}

TEST(DefaultIntensity, EqualKneesRejected) {
  DefaultIntensityParams q;
  q.v_l = q.v_h;
  EXPECT_THROW(default_intensity_q(1.0, q), ContractError);
}

TEST(ExactSolutions, NonlinearDiffusion) {
  EXPECT_DOUBLE_EQ(exact_nonlinear_diffusion(Vector::Zero(4), 0.0, 4), 0.5);
  Vector x(3);
  x << 0.2, -0.5, 0.1;
  EXPECT_DOUBLE_EQ(exact_nonlinear_diffusion(x, 0.2, 3), 0.5);
  Vector x2(2);
  x2 << 0.3, 0.2;
  EXPECT_NEAR(exact_nonlinear_diffusion(x2, 0.01, 2), 1.0 / (1.0 + std::exp(-0.51)), 1e-15);
  EXPECT_NEAR(exact_nonlinear_diffusion(x2, 0.01, 2), 0.62480, 1e-5);
  EXPECT_THROW(exact_nonlinear_diffusion(x2, 0.0, 3), ShapeError);
}

TEST(ExactSolutions, Heat) {
  EXPECT_EQ(exact_heat(Vector::Zero(10), 0.0, 10), 0.0);
  EXPECT_EQ(exact_heat(Vector::Zero(10), 1.0, 10), 10.0);
  EXPECT_EQ(exact_heat(Vector::Ones(10), 0.5, 10), 15.0);
}

TEST(SelfTest, ExactSolutionsSatisfyCanonicalForm) {
  for (const char* name : {"nonlinear_diffusion", "heat"}) {
    for (int d : {2, 10}) {
      const PdeProblem p = build_problem(name, {{"d", d}});
      const SelfTestReport r = self_test(p, 20, 3);
      EXPECT_TRUE(r.passed) << name << " d=" << d << " residual " << r.max_residual;
      EXPECT_EQ(r.probes, 20);
    }
  }
}

TEST(SelfTest, WrongSolutionIsDetected) {
  const PdeProblem p = build_problem("heat", {{"d", 3}});
  // Solution of the Laplacian with a factor 2 (the unit-diffusion mismatch).
  const PdeProblem::ExactFn wrong = [&](const Vector& x, double t) { return exact_heat(x, 2 * (p.horizon - t), 3); };
  EXPECT_GT(std::abs(canonical_residual(p, wrong, Vector::Constant(3, 0.5), 0.3)), 1.0);
}

TEST(SelfTest, ProblemWithoutExactSolutionRefused) {
  EXPECT_THROW(self_test(build_problem("bs_exp", {{"d", 2}}), 3, 1), ContractError);
}

TEST(SelfTest, HjbColeHopfResidualInOneDimension) {
  const PdeProblem p = build_problem("hjb", {{"d", 1}});
  const double lambda = p.params.at("lambda");
  const PdeProblem::ExactFn g = [&](const Vector& x, double t) {
    return hjb_quadrature_1d(x(0), lambda, p.horizon - t);
  };
  for (double x : {-0.8, -0.1, 0.4, 1.0}) {
    for (double t : {0.0, 0.5, 0.9}) {
      EXPECT_LE(std::abs(canonical_residual(p, g, Vector::Constant(1, x), t)), 1e-4) << x << ' ' << t;
    }
  }
}

TEST(CanonicalForm, Records) {
  EXPECT_TRUE(canonical_form_map("heat").f_is_zero);
  EXPECT_TRUE(canonical_form_map("gbm").f_is_zero);
  const CanonicalForm ac = canonical_form_map("allen_cahn");
  EXPECT_FALSE(ac.f_is_zero);
  EXPECT_FALSE(ac.f_depends_on_z);
  EXPECT_TRUE(canonical_form_map("hjb").f_depends_on_z);
  EXPECT_TRUE(build_problem("heat", {{"d", 2}}).nonlinearity.identically_zero);
}

TEST(Registry, TableListsEveryProblem) {
  const std::string table = registry_table();
  for (const std::string& name : problem_names()) EXPECT_NE(table.find(name), std::string::npos);
}

TEST(Registry, LmCompatibilityGate) {
  EXPECT_NO_THROW(bsde::check_compatibility(build_problem("allen_cahn_xdiff", {{"d", 4}}), sde::Scheme::kLm));
  PdeProblem p = build_problem("heat", {{"d", 2}});
  p.dynamics.diffusion = sde::Diffusion::dense(
      2, [](const Vector&, double) { return (Matrix(2, 2) << 1, 1, 0, 1).finished(); }, {}, true);
  EXPECT_THROW(bsde::check_compatibility(p, sde::Scheme::kLm), Error);
}

}  // namespace
}  // namespace kolmo::problems
