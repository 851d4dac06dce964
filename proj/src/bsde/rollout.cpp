#include "kolmo/bsde/rollout.hpp"

#include <cmath>

#include "kolmo/util/errors.hpp"

namespace kolmo::bsde {
namespace {

void check_paths(const DeepBsdeModel& model, const PathBatch& paths, Scheme expected) {
  if (model.spec().scheme != expected) {
    throw ContractError("rollout for " + sde::scheme_name(expected) + " called on a " +
                        sde::scheme_name(model.spec().scheme) + " model");
  }
  if (paths.scheme != expected) {
    throw ContractError("path batch was simulated with " + sde::scheme_name(paths.scheme) + ", expected " +
                        sde::scheme_name(expected));
  }
  if (!(paths.grid == model.spec().grid)) throw ContractError("path grid differs from the model grid");
  if (paths.dim() != model.dim()) throw ShapeError("path dimension differs from the model dimension");
  if (static_cast<int>(paths.states.size()) != paths.steps() + 1) {
    throw ContractError("path batch must hold N + 1 states");
  }
  if (static_cast<int>(paths.increments.size()) != paths.steps() + 1) {
    throw ContractError("path batch must hold N + 1 increment slots");
  }
}

// z_n for time index n: the initial gradient net at n = 0, otherwise the step net.
Tape::Var z_at(Tape& tape, DeepBsdeModel& model, int n, Tape::Var input) {
  return n == 0 ? tape.mlp(model.net_grad0(), input) : tape.mlp(model.step_net(n), input);
}

// g - tau f(t_n, Y^n, g, z)
Tape::Var drift_update(Tape& tape, const PdeProblem& problem, double t, const Matrix& x, double tau, Tape::Var g,
                       Tape::Var z) {
  if (problem.nonlinearity.identically_zero) return g;
  const Tape::Var f = record_nonlinearity(tape, problem, t, x, g, z);
  return tape.sub(g, tape.scale(f, tau));
}

}  // namespace

Tape::Var record_nonlinearity(Tape& tape, const PdeProblem& problem, double t, const Matrix& x, Tape::Var g,
                              Tape::Var z) {
  const Vector y = tape.value(g).col(0);
  const Matrix& zv = tape.value(z);
  Vector dy;
  Matrix dz;
  problem.nonlinearity.partials(t, x, y, zv, dy, dz);
  Matrix value = problem.nonlinearity.value(t, x, y, zv);
  return tape.custom({g, z}, std::move(value),
                     [dy = std::move(dy), dz = std::move(dz)](const Matrix& adj, std::vector<Matrix*>& in) {
                       if (in[0]) *in[0] += adj.cwiseProduct(dy);
                       if (in[1]) *in[1] += adj.col(0).asDiagonal() * dz;
                     });
}

Tape::Var rollout_em(Tape& tape, DeepBsdeModel& model, const PathBatch& paths, const PdeProblem& problem) {
  check_paths(model, paths, Scheme::kEm);
  const double tau = paths.grid.tau();
  Tape::Var g = tape.mlp(model.net_g0(), tape.constant(model.normalize(paths.states[0])));
  for (int n = 0; n < paths.steps(); ++n) {
    const Matrix& x = paths.states[n];
    const Tape::Var z = z_at(tape, model, n, tape.constant(model.normalize(x)));
    g = drift_update(tape, problem, paths.grid.time(n), x, tau, g, z);
    g = tape.add(g, tape.row_dot(z, paths.increments[n]));
  }
  return g;
}

Tape::Var rollout_milstein(Tape& tape, DeepBsdeModel& model, const PathBatch& paths, const PdeProblem& problem) {
  check_paths(model, paths, Scheme::kMilstein);
  const bool learned = model.spec().milstein_mode == MilsteinMode::kLearned;
  const sde::Diffusion& diffusion = problem.dynamics.diffusion;
  if (!learned && !diffusion.has_jacobian()) {
    throw CapabilityError("explicit Milstein rollout needs the spatial Jacobian of B; use the learned mode");
  }
  const double tau = paths.grid.tau();
  const int batch = paths.batch();
  const int d = paths.dim();
  Tape::Var g = tape.mlp(model.net_g0(), tape.constant(model.normalize(paths.states[0])));
  for (int n = 0; n < paths.steps(); ++n) {
    const Matrix& x = paths.states[n];
    const Matrix& dw = paths.increments[n];
    const double t = paths.grid.time(n);
    const Tape::Var input = tape.constant(model.normalize(x));
    const Tape::Var z = z_at(tape, model, n, input);
    g = drift_update(tape, problem, t, x, tau, g, z);
    if (learned) {
      g = tape.add(g, tape.row_dot(z, dw));
      // S_row = vec(dW dW^T - tau I) / 2, so row_dot(M, S) is the correction.
      Matrix s(batch, d * d);
      for (int p = 0; p < batch; ++p) {
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < d; ++j) s(p, i * d + j) = 0.5 * (dw(p, i) * dw(p, j) - (i == j ? tau : 0.0));
        }
      }
      const Tape::Var m = tape.mlp(model.milstein_net(n), input);
      g = tape.add(g, tape.row_dot(m, s));
    } else {
      // z . dW + 1/2 z . m  with m from milstein_coefficients
      Matrix coef(batch, d);
      for (int p = 0; p < batch; ++p) {
        const Vector xp = x.row(p).transpose();
        const Vector dwp = dw.row(p).transpose();
        coef.row(p) = (dwp + 0.5 * diffusion.milstein_coefficients(xp, t, dwp, tau)).transpose();
      }
      g = tape.add(g, tape.row_dot(z, coef));
    }
  }
  return g;
}

Tape::Var rollout_lm(Tape& tape, DeepBsdeModel& model, const PathBatch& paths, const PdeProblem& problem) {
  check_paths(model, paths, Scheme::kLm);
  const double tau = paths.grid.tau();
  Tape::Var g = tape.mlp(model.net_g0(), tape.constant(model.normalize(paths.states[0])));
  for (int n = 0; n < paths.steps(); ++n) {
    const Matrix& x = paths.states[n];
    const Tape::Var input = tape.constant(model.normalize(x));
    const Tape::Var z = z_at(tape, model, n, input);
    g = drift_update(tape, problem, paths.grid.time(n), x, tau, g, z);
    const Matrix colored = 0.5 * (paths.increments[n] + paths.increments[n + 1]);
    g = tape.add(g, tape.row_dot(z, colored));
    const Tape::Var h = tape.mlp(model.lm_net(n), input);
    g = tape.sub(g, tape.scale(h, 0.25 * tau));
  }
  return g;
}

Tape::Var rollout(Tape& tape, DeepBsdeModel& model, const PathBatch& paths, const PdeProblem& problem) {
  switch (model.spec().scheme) {
    case Scheme::kEm:
      return rollout_em(tape, model, paths, problem);
    case Scheme::kMilstein:
      return rollout_milstein(tape, model, paths, problem);
    case Scheme::kLm:
      return rollout_lm(tape, model, paths, problem);
  }
  throw ContractError("unknown scheme");
}

Vector evaluate_rollout(DeepBsdeModel& model, const PathBatch& paths, const PdeProblem& problem) {
  Tape tape;
  return tape.value(rollout(tape, model, paths, problem)).col(0);
}

Vector terminal_values(const PathBatch& paths, const PdeProblem& problem) {
  return problem.terminal(paths.states.back());
}

Tape::Var record_loss(Tape& tape, DeepBsdeModel& model, const PathBatch& paths, const PdeProblem& problem) {
  const Tape::Var estimate = rollout(tape, model, paths, problem);
  const Matrix target = terminal_values(paths, problem);
  return tape.mean_squared_error(estimate, target);
}

double loss(DeepBsdeModel& model, const PathBatch& paths, const PdeProblem& problem) {
  Tape tape;
  const double value = tape.value(record_loss(tape, model, paths, problem))(0, 0);
  if (!std::isfinite(value)) throw TrainingDiverged("loss is not finite", -1);
  return value;
}

}  // namespace kolmo::bsde
