#include "kolmo/nn/mlp.hpp"

#include <cmath>
#include <sstream>

#include "kolmo/util/errors.hpp"

namespace kolmo::nn {

namespace {

void check_widths(const std::vector<int>& widths) {
  if (widths.size() < 2) {
    throw InvalidArchitecture("network needs at least an input and an output width, got " +
                              std::to_string(widths.size()) + " widths");
  }
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] < 1) {
      std::ostringstream msg;
      msg << "width " << i << " is " << widths[i] << ", must be >= 1";
      throw InvalidArchitecture(msg.str());
    }
  }
}

}  // namespace

void Mlp::allocate(const std::vector<int>& widths) {
  check_widths(widths);
  widths_ = widths;
  const int layers = static_cast<int>(widths.size()) - 1;
  weights_.resize(layers);
  biases_.resize(layers);
  weight_grads_.resize(layers);
  bias_grads_.resize(layers);
  for (int l = 0; l < layers; ++l) {
    weights_[l].setZero(widths[l + 1], widths[l]);
    biases_[l].setZero(widths[l + 1]);
    weight_grads_[l].setZero(widths[l + 1], widths[l]);
    bias_grads_[l].setZero(widths[l + 1]);
  }
}

Mlp Mlp::init(const std::vector<int>& widths, std::mt19937_64& rng, InitScaling scaling,
              std::string name) {
  Mlp net;
  net.allocate(widths);
  net.name_ = std::move(name);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int l = 0; l < net.layer_count(); ++l) {
    const double scale =
        scaling == InitScaling::kFanIn ? 1.0 / std::sqrt(static_cast<double>(widths[l])) : 1.0;
    Matrix& w = net.weights_[l];
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = scale * unit(rng);
    }
    Vector& b = net.biases_[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = scale * unit(rng);
  }
  return net;
}

Vector Mlp::forward(const Vector& x) const {
  if (x.size() != input_dim()) {
    throw ShapeError("network '" + name_ + "' expects input of length " +
                     std::to_string(input_dim()) + ", got " + std::to_string(x.size()));
  }
  Vector h = x;
  for (int l = 0; l < layer_count(); ++l) {
    Vector z = weights_[l] * h + biases_[l];
    if (l + 1 < layer_count()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h;
}

Matrix Mlp::forward_batch(const Matrix& x) const {
  if (x.cols() != input_dim()) {
    throw ShapeError("network '" + name_ + "' expects " + std::to_string(input_dim()) +
                     " input columns, got " + std::to_string(x.cols()));
  }
  Matrix h = x;
  for (int l = 0; l < layer_count(); ++l) {
    Matrix z = h * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    if (l + 1 < layer_count()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (int l = 0; l < layer_count(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

void Mlp::zero_grad() {
  for (auto& g : weight_grads_) g.setZero();
  for (auto& g : bias_grads_) g.setZero();
}

std::vector<ParamView> Mlp::params() {
  std::vector<ParamView> views;
  for (int l = 0; l < layer_count(); ++l) {
    views.push_back({name_ + ".W" + std::to_string(l), weights_[l].data(),
                     weight_grads_[l].data(), static_cast<std::size_t>(weights_[l].size())});
    views.push_back({name_ + ".b" + std::to_string(l), biases_[l].data(), bias_grads_[l].data(),
                     static_cast<std::size_t>(biases_[l].size())});
  }
  return views;
}

std::vector<double> Mlp::flat_params() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (int l = 0; l < layer_count(); ++l) {
    flat.insert(flat.end(), weights_[l].data(), weights_[l].data() + weights_[l].size());
    flat.insert(flat.end(), biases_[l].data(), biases_[l].data() + biases_[l].size());
  }
  return flat;
}

void Mlp::set_flat_params(const std::vector<double>& flat) {
  if (flat.size() != param_count()) {
    throw ShapeError("network '" + name_ + "' has " + std::to_string(param_count()) +
                     " parameters, got " + std::to_string(flat.size()));
  }
  std::size_t pos = 0;
  for (int l = 0; l < layer_count(); ++l) {
    std::copy_n(flat.begin() + pos, weights_[l].size(), weights_[l].data());
    pos += weights_[l].size();
    std::copy_n(flat.begin() + pos, biases_[l].size(), biases_[l].data());
    pos += biases_[l].size();
  }
}

Mlp Mlp::from_params(const std::vector<int>& widths, const std::vector<double>& flat,
                     std::string name) {
  Mlp net;
  net.allocate(widths);
  net.name_ = std::move(name);
  net.set_flat_params(flat);
  return net;
}

bool Mlp::operator==(const Mlp& other) const {
  if (widths_ != other.widths_) return false;
  for (int l = 0; l < layer_count(); ++l) {
    if (weights_[l] != other.weights_[l] || biases_[l] != other.biases_[l]) return false;
  }
  return true;
}

std::vector<int> standard_widths(int d, int out) { return {d, d + 10, d + 10, out}; }

}  // namespace kolmo::nn
