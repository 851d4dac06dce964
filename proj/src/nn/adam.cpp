#include "kolmo/nn/adam.hpp"

#include <cmath>
#include <sstream>

#include "kolmo/util/errors.hpp"

namespace kolmo::nn {

Adam::Adam(std::vector<ParamView> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const ParamView& p : params_) {
    m_.emplace_back(p.size, 0.0);
    v_.emplace_back(p.size, 0.0);
  }
}

void Adam::step(double lr) {
  if (!(lr > 0.0)) throw ContractError("learning rate must be positive");
  for (const ParamView& p : params_) {
    for (std::size_t i = 0; i < p.size; ++i) {
      if (!std::isfinite(p.grad[i])) {
        std::ostringstream msg;
        msg << "non-finite gradient " << p.grad[i] << " in " << p.label << "[" << i
            << "] at optimizer step " << step_count_ + 1;
        throw NonFiniteGradient(msg.str());
      }
    }
  }
  ++step_count_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const ParamView& p = params_[k];
    double* m = m_[k].data();
    double* v = v_[k].data();
    for (std::size_t i = 0; i < p.size; ++i) {
      const double g = p.grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace kolmo::nn
