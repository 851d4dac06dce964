#pragma once

#include <vector>

#include "kolmo/nn/mlp.hpp"

namespace kolmo::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected ADAM over a fixed set of parameter blocks. The blocks must
/// outlive the optimizer and keep their storage (no reallocation).
class Adam {
 public:
  explicit Adam(std::vector<ParamView> params, AdamConfig config = {});

  /// One update with learning rate `lr` using the gradients currently stored in
  /// the blocks. Throws NonFiniteGradient (naming the block and step) before
  /// touching any parameter if a gradient is NaN or infinite.
  void step(double lr);

  long step_count() const { return step_count_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<std::vector<double>>& first_moment() const { return m_; }
  const std::vector<std::vector<double>>& second_moment() const { return v_; }

 private:
  std::vector<ParamView> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long step_count_ = 0;
};

}  // namespace kolmo::nn
