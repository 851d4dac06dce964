#include "kolmo/problems/pde_problem.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "kolmo/sde/random.hpp"
#include "kolmo/util/errors.hpp"

namespace kolmo::problems {

Nonlinearity Nonlinearity::zero() {
  Nonlinearity f;
  f.value = [](double, const Matrix& x, const Vector&, const Matrix&) { return Vector::Zero(x.rows()).eval(); };
  f.partials = [](double, const Matrix& x, const Vector&, const Matrix&, Vector& dy, Matrix& dz) {
    dy = Vector::Zero(x.rows());
    dz = Matrix::Zero(x.rows(), x.cols());
  };
  f.identically_zero = true;
  return f;
}

double PdeProblem::terminal_at(const Vector& x) const {
  if (x.size() != dim) throw ShapeError("point has dimension " + std::to_string(x.size()) + ", expected " +
                                        std::to_string(dim));
  return terminal(x.transpose())(0);
}

double canonical_residual(const PdeProblem& problem, const PdeProblem::ExactFn& g, const Vector& x, double t,
                          double h) {
  const int d = problem.dim;
  const double g0 = g(x, t);
  const double dt = (g(x, t + h) - g(x, t - h)) / (2.0 * h);

  Vector grad(d);
  Matrix hess = Matrix::Zero(d, d);
  Vector steps(d);
  Vector xp = x;
  for (int i = 0; i < d; ++i) {
    steps(i) = h * (1.0 + std::abs(x(i)));
    xp(i) = x(i) + steps(i);
    const double gp = g(xp, t);
    xp(i) = x(i) - steps(i);
    const double gm = g(xp, t);
    xp(i) = x(i);
    grad(i) = (gp - gm) / (2.0 * steps(i));
    hess(i, i) = (gp - 2.0 * g0 + gm) / (steps(i) * steps(i));
  }

  const Matrix b = problem.dynamics.diffusion.matrix(x, t);
  const Matrix bbt = b * b.transpose();
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      if (bbt(i, j) == 0.0) continue;
      auto at = [&](double si, double sj) {
        Vector y = x;
        y(i) += si * steps(i);
        y(j) += sj * steps(j);
        return g(y, t);
      };
      hess(i, j) = hess(j, i) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * steps(i) * steps(j));
    }
  }

  const Vector drift = problem.dynamics.drift(x, t);
  const Matrix z = (b.transpose() * grad).transpose();
  const Vector y = Vector::Constant(1, g0);
  const double f = problem.nonlinearity.value(t, x.transpose(), y, z)(0);
  return dt + drift.dot(grad) + 0.5 * (bbt.cwiseProduct(hess)).sum() + f;
}

SelfTestReport self_test(const PdeProblem& problem, int probes, std::uint64_t seed, double tol) {
  if (!problem.has_exact()) throw ContractError("problem '" + problem.name + "' has no exact solution");
  std::mt19937_64 rng = sde::substream(seed, sde::stream_key(sde::StreamTag::kProbes), 0);
  std::uniform_real_distribution<double> box(problem.domain_lo, problem.domain_hi);
  std::uniform_real_distribution<double> time(0.0, problem.horizon);
  SelfTestReport report;
  for (int p = 0; p < probes; ++p) {
    Vector x(problem.dim);
    for (int i = 0; i < problem.dim; ++i) x(i) = box(rng);
    const double t = time(rng);
    report.max_residual = std::max(report.max_residual, std::abs(canonical_residual(problem, problem.exact, x, t)));
    ++report.probes;
  }
  report.passed = report.max_residual <= tol;
  return report;
}

}  // namespace kolmo::problems
