#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kolmo/sde/steppers.hpp"

namespace kolmo::problems {

using sde::Matrix;
using sde::Vector;

/// f(t, x, y, z) evaluated row-wise on a batch: x and z are (batch x d), y has
/// one entry per row. z plays B^T grad g.
struct Nonlinearity {
  using ValueFn = std::function<Vector(double t, const Matrix& x, const Vector& y, const Matrix& z)>;
  // Writes df/dy (batch) and df/dz (batch x d).
  using PartialsFn =
      std::function<void(double t, const Matrix& x, const Vector& y, const Matrix& z, Vector& dy, Matrix& dz)>;

  ValueFn value;
  PartialsFn partials;
  bool identically_zero = false;

  static Nonlinearity zero();
};

struct ReferenceValue {
  Vector point;
  double time = 0.0;
  double value = 0.0;
  std::string source;
};

/// A semilinear backward Kolmogorov problem
///   d_t g + A . grad g + 1/2 Tr(B B^T Hess g) + f(t, x, g, B^T grad g) = 0,  g(x, T) = phi(x).
/// Forward-in-time equations are stored after the t -> T - t reversal, so time
/// here is always backward time and the quantity of interest is g(x, 0).
struct PdeProblem {
  using TerminalFn = std::function<Vector(const Matrix& x)>;
  using ExactFn = std::function<double(const Vector& x, double t)>;

  std::string name;
  int dim = 0;
  double horizon = 1.0;
  int default_steps = 40;
  sde::Dynamics dynamics;
  Nonlinearity nonlinearity;
  TerminalFn terminal;
  // Default evaluation point and sampling box [domain_lo, domain_hi]^d.
  Vector x0;
  double domain_lo = 0.0;
  double domain_hi = 1.0;
  // Network inputs are (x - input_shift) / input_scale.
  double input_shift = 0.0;
  double input_scale = 1.0;
  double default_lr = 0.008;
  int default_train_steps = 6000;
  ExactFn exact;
  std::vector<ReferenceValue> references;
  std::map<std::string, double> params;

  double terminal_at(const Vector& x) const;
  bool has_exact() const { return static_cast<bool>(exact); }
};

/// Canonical-form residual of a candidate solution at (x, t), with central
/// differences of step h for d_t g, grad g and Hess g.
double canonical_residual(const PdeProblem& problem, const PdeProblem::ExactFn& g, const Vector& x, double t,
                          double h = 5e-4);

struct SelfTestReport {
  double max_residual = 0.0;
  int probes = 0;
  bool passed = false;
};

/// Evaluates canonical_residual of the stored exact solution at `probes`
/// random points of the sampling box and times in [0, T). Throws
/// ContractError when the problem has no exact solution.
SelfTestReport self_test(const PdeProblem& problem, int probes, std::uint64_t seed, double tol = 1e-6);

}  // namespace kolmo::problems
