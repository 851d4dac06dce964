#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace kolmo::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// How the uniform [-1, 1] draws are scaled after sampling.
enum class InitScaling {
  kUnit,   // raw U[-1, 1] for every weight and bias
  kFanIn,  // each layer's draws divided by sqrt(fan_in)
};

// A contiguous block of trainable numbers together with its gradient buffer.
struct ParamView {
  std::string label;
  double* value = nullptr;
  double* grad = nullptr;
  std::size_t size = 0;
};

/// Dense feed-forward network: affine layers with ReLU on hidden layers and the
/// identity on the output layer. Batched evaluation takes one sample per row.
class Mlp {
 public:
  Mlp() = default;

  /// Draws every weight and bias i.i.d. from U[-1, 1] (optionally fan-in
  /// scaled). Throws InvalidArchitecture for fewer than two widths or a width < 1.
  static Mlp init(const std::vector<int>& widths, std::mt19937_64& rng,
                  InitScaling scaling = InitScaling::kUnit, std::string name = "mlp");

  Vector forward(const Vector& x) const;
  Matrix forward_batch(const Matrix& x) const;

  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int layer_count() const { return static_cast<int>(weights_.size()); }
  std::size_t param_count() const;

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  // Layer l maps width l to width l+1; weights are (out x in).
  Matrix& weight(int l) { return weights_[l]; }
  const Matrix& weight(int l) const { return weights_[l]; }
  Vector& bias(int l) { return biases_[l]; }
  const Vector& bias(int l) const { return biases_[l]; }
  Matrix& weight_grad(int l) { return weight_grads_[l]; }
  const Matrix& weight_grad(int l) const { return weight_grads_[l]; }
  Vector& bias_grad(int l) { return bias_grads_[l]; }
  const Vector& bias_grad(int l) const { return bias_grads_[l]; }

  void zero_grad();
  std::vector<ParamView> params();

  // Flattened parameters in layer order (weights column-major, then bias).
  std::vector<double> flat_params() const;
  void set_flat_params(const std::vector<double>& flat);

  /// Builds a network with the given shape and explicit parameters.
  static Mlp from_params(const std::vector<int>& widths, const std::vector<double>& flat,
                         std::string name = "mlp");

  bool operator==(const Mlp& other) const;

 private:
  void allocate(const std::vector<int>& widths);

  std::string name_ = "mlp";
  std::vector<int> widths_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
  std::vector<Matrix> weight_grads_;
  std::vector<Vector> bias_grads_;
};

/// Hidden-layer layout used throughout: input d, two hidden layers of d+10, output `out`.
std::vector<int> standard_widths(int d, int out);

}  // namespace kolmo::nn
