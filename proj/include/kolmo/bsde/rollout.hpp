#pragma once

#include "kolmo/bsde/model.hpp"
#include "kolmo/nn/tape.hpp"
#include "kolmo/problems/pde_problem.hpp"
#include "kolmo/sde/path_batch.hpp"

namespace kolmo::bsde {

using nn::Tape;
using problems::PdeProblem;
using sde::PathBatch;

/// Records f(t_n, Y^n, g, z) on the tape with its partials in g and z.
Tape::Var record_nonlinearity(Tape& tape, const PdeProblem& problem, double t, const Matrix& x, Tape::Var g,
                              Tape::Var z);

/// g_{n+1} = g_n - f tau + z_n . dW^n ; returns the (batch x 1) terminal estimate.
Tape::Var rollout_em(Tape& tape, DeepBsdeModel& model, const PathBatch& paths, const PdeProblem& problem);

/// EM recursion plus 1/2 sum_ij M_ij (dW_i dW_j - tau delta_ij), with M from
/// z and dB (explicit mode) or from the per-slice Milstein nets (learned mode).
Tape::Var rollout_milstein(Tape& tape, DeepBsdeModel& model, const PathBatch& paths, const PdeProblem& problem);

/// g_{n+1} = g_n - f tau + 1/2 z_n . (dW^n + dW^{n+1}) - 1/4 h_n tau, h_n from the LM nets.
Tape::Var rollout_lm(Tape& tape, DeepBsdeModel& model, const PathBatch& paths, const PdeProblem& problem);

/// Dispatches on the model scheme.
Tape::Var rollout(Tape& tape, DeepBsdeModel& model, const PathBatch& paths, const PdeProblem& problem);

/// Terminal estimates without recording gradients.
Vector evaluate_rollout(DeepBsdeModel& model, const PathBatch& paths, const PdeProblem& problem);

/// mean |phi(Y^N) - g_hat|^2 as a (1 x 1) tape node.
Tape::Var record_loss(Tape& tape, DeepBsdeModel& model, const PathBatch& paths, const PdeProblem& problem);

/// Loss value only. Throws TrainingDiverged (step -1) when it is not finite.
double loss(DeepBsdeModel& model, const PathBatch& paths, const PdeProblem& problem);

/// Terminal values phi(Y^N) of a batch.
Vector terminal_values(const PathBatch& paths, const PdeProblem& problem);

}  // namespace kolmo::bsde
