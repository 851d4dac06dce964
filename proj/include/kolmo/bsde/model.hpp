#pragma once

#include <random>
#include <string>
#include <vector>

#include "kolmo/nn/mlp.hpp"
#include "kolmo/sde/steppers.hpp"
#include "kolmo/sde/time_grid.hpp"

namespace kolmo::bsde {

using nn::Matrix;
using nn::Mlp;
using nn::Vector;
using sde::Scheme;
using sde::TimeGrid;

/// How the Milstein rollout obtains grad(g)^T B div(B): from z and the
/// problem's dB, or from a dedicated sub-network per time slice.
enum class MilsteinMode { kExplicit, kLearned };

std::string milstein_mode_name(MilsteinMode mode);
MilsteinMode parse_milstein_mode(const std::string& name);

struct ModelSpec {
  int dim = 1;
  TimeGrid grid{1.0, 1};
  Scheme scheme = Scheme::kEm;
  MilsteinMode milstein_mode = MilsteinMode::kExplicit;
  // Inputs of every sub-network are (x - input_shift) / input_scale.
  double input_shift = 0.0;
  double input_scale = 1.0;

  bool operator==(const ModelSpec&) const = default;
};

/// The time-unrolled model: g0 net (d -> 1), initial gradient net (d -> d),
/// one z net per interior time (d -> d), plus for learned Milstein one
/// (d -> d^2) net per time slice and for LM one (d -> 1) net per time slice.
/// Hidden layers are two of width d + 10.
class DeepBsdeModel {
 public:
  DeepBsdeModel() = default;

  static DeepBsdeModel create(const ModelSpec& spec, std::mt19937_64& rng,
                              nn::InitScaling scaling = nn::InitScaling::kFanIn);
  /// Assembles a model from existing networks; shapes are validated.
  static DeepBsdeModel assemble(const ModelSpec& spec, Mlp g0, Mlp grad0, std::vector<Mlp> step_nets,
                                std::vector<Mlp> milstein_nets, std::vector<Mlp> lm_nets);

  const ModelSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int steps() const { return spec_.grid.steps(); }

  Mlp& net_g0() { return g0_; }
  const Mlp& net_g0() const { return g0_; }
  Mlp& net_grad0() { return grad0_; }
  const Mlp& net_grad0() const { return grad0_; }
  /// z net at time index n, 1 <= n < N.
  Mlp& step_net(int n);
  const Mlp& step_net(int n) const;
  /// Learned Milstein net at time index n, 0 <= n < N.
  Mlp& milstein_net(int n);
  /// LM trace net at time index n, 0 <= n < N.
  Mlp& lm_net(int n);

  const std::vector<Mlp>& step_nets() const { return step_; }
  const std::vector<Mlp>& milstein_nets() const { return milstein_; }
  const std::vector<Mlp>& lm_nets() const { return lm_; }

  std::vector<Mlp*> all_nets();
  std::vector<const Mlp*> all_nets() const;
  std::vector<nn::ParamView> params();
  std::size_t param_count() const;
  void zero_grad();

  Matrix normalize(const Matrix& x) const;
  /// net_g0 at one point. Throws ShapeError on a dimension mismatch.
  double predict_g0(const Vector& x) const;
  Vector predict_g0_batch(const Matrix& x) const;

  bool operator==(const DeepBsdeModel& other) const;

 private:
  ModelSpec spec_;
  Mlp g0_;
  Mlp grad0_;
  std::vector<Mlp> step_;
  std::vector<Mlp> milstein_;
  std::vector<Mlp> lm_;
};

}  // namespace kolmo::bsde
