#include "kolmo/bsde/model.hpp"

#include <algorithm>
#include <cctype>

#include "kolmo/util/errors.hpp"

namespace kolmo::bsde {
namespace {

void check_shape(const Mlp& net, int in, int out, const std::string& what) {
  if (net.widths().empty() || net.input_dim() != in || net.output_dim() != out) {
    throw InvalidArchitecture(what + " must map " + std::to_string(in) + " -> " + std::to_string(out));
  }
}

}  // namespace

std::string milstein_mode_name(MilsteinMode mode) {
  return mode == MilsteinMode::kExplicit ? "explicit" : "learned";
}

MilsteinMode parse_milstein_mode(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "explicit") return MilsteinMode::kExplicit;
  if (lower == "learned") return MilsteinMode::kLearned;
  throw ContractError("unknown Milstein mode '" + name + "' (expected explicit or learned)");
}

DeepBsdeModel DeepBsdeModel::create(const ModelSpec& spec, std::mt19937_64& rng, nn::InitScaling scaling) {
  const int d = spec.dim;
  const int n_steps = spec.grid.steps();
  if (d < 1) throw InvalidArchitecture("model dimension must be >= 1");
  if (!(spec.input_scale > 0.0)) throw InvalidArchitecture("input scale must be positive");
  Mlp g0 = Mlp::init(nn::standard_widths(d, 1), rng, scaling, "g0");
  Mlp grad0 = Mlp::init(nn::standard_widths(d, d), rng, scaling, "grad0");
  std::vector<Mlp> steps;
  for (int n = 1; n < n_steps; ++n) {
    steps.push_back(Mlp::init(nn::standard_widths(d, d), rng, scaling, "z" + std::to_string(n)));
  }
  std::vector<Mlp> milstein;
  std::vector<Mlp> lm;
  if (spec.scheme == Scheme::kMilstein && spec.milstein_mode == MilsteinMode::kLearned) {
    for (int n = 0; n < n_steps; ++n) {
      milstein.push_back(Mlp::init(nn::standard_widths(d, d * d), rng, scaling, "milstein" + std::to_string(n)));
    }
  }
  if (spec.scheme == Scheme::kLm) {
    for (int n = 0; n < n_steps; ++n) {
      lm.push_back(Mlp::init(nn::standard_widths(d, 1), rng, scaling, "lm" + std::to_string(n)));
    }
  }
  return assemble(spec, std::move(g0), std::move(grad0), std::move(steps), std::move(milstein), std::move(lm));
}

DeepBsdeModel DeepBsdeModel::assemble(const ModelSpec& spec, Mlp g0, Mlp grad0, std::vector<Mlp> step_nets,
                                      std::vector<Mlp> milstein_nets, std::vector<Mlp> lm_nets) {
  const int d = spec.dim;
  const int n_steps = spec.grid.steps();
  check_shape(g0, d, 1, "g0 net");
  check_shape(grad0, d, d, "initial gradient net");
  if (static_cast<int>(step_nets.size()) != n_steps - 1) {
    throw InvalidArchitecture("expected " + std::to_string(n_steps - 1) + " z nets");
  }
  for (const Mlp& net : step_nets) check_shape(net, d, d, "z net");
  const bool learned = spec.scheme == Scheme::kMilstein && spec.milstein_mode == MilsteinMode::kLearned;
  if (static_cast<int>(milstein_nets.size()) != (learned ? n_steps : 0)) {
    throw InvalidArchitecture("Milstein net family does not match the scheme");
  }
  for (const Mlp& net : milstein_nets) check_shape(net, d, d * d, "Milstein net");
  if (static_cast<int>(lm_nets.size()) != (spec.scheme == Scheme::kLm ? n_steps : 0)) {
    throw InvalidArchitecture("LM net family does not match the scheme");
  }
  for (const Mlp& net : lm_nets) check_shape(net, d, 1, "LM net");

  DeepBsdeModel model;
  model.spec_ = spec;
  model.g0_ = std::move(g0);
  model.grad0_ = std::move(grad0);
  model.step_ = std::move(step_nets);
  model.milstein_ = std::move(milstein_nets);
  model.lm_ = std::move(lm_nets);
  return model;
}

Mlp& DeepBsdeModel::step_net(int n) {
  if (n < 1 || n >= steps()) throw ContractError("z net index out of range: " + std::to_string(n));
  return step_[n - 1];
}

const Mlp& DeepBsdeModel::step_net(int n) const {
  if (n < 1 || n >= steps()) throw ContractError("z net index out of range: " + std::to_string(n));
  return step_[n - 1];
}

Mlp& DeepBsdeModel::milstein_net(int n) {
  if (milstein_.empty()) throw ContractError("model has no learned Milstein nets");
  return milstein_.at(n);
}

Mlp& DeepBsdeModel::lm_net(int n) {
  if (lm_.empty()) throw ContractError("model has no LM nets");
  return lm_.at(n);
}

std::vector<Mlp*> DeepBsdeModel::all_nets() {
  std::vector<Mlp*> out{&g0_, &grad0_};
  for (Mlp& net : step_) out.push_back(&net);
  for (Mlp& net : milstein_) out.push_back(&net);
  for (Mlp& net : lm_) out.push_back(&net);
  return out;
}

std::vector<const Mlp*> DeepBsdeModel::all_nets() const {
  std::vector<const Mlp*> out{&g0_, &grad0_};
  for (const Mlp& net : step_) out.push_back(&net);
  for (const Mlp& net : milstein_) out.push_back(&net);
  for (const Mlp& net : lm_) out.push_back(&net);
  return out;
}

std::vector<nn::ParamView> DeepBsdeModel::params() {
  std::vector<nn::ParamView> out;
  for (Mlp* net : all_nets()) {
    std::vector<nn::ParamView> p = net->params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::size_t DeepBsdeModel::param_count() const {
  std::size_t total = 0;
  for (const Mlp* net : all_nets()) total += net->param_count();
  return total;
}

void DeepBsdeModel::zero_grad() {
  for (Mlp* net : all_nets()) net->zero_grad();
}

Matrix DeepBsdeModel::normalize(const Matrix& x) const {
  return (x.array() - spec_.input_shift) / spec_.input_scale;
}

double DeepBsdeModel::predict_g0(const Vector& x) const {
  if (x.size() != dim()) {
    throw ShapeError("point has dimension " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(dim()));
  }
  return g0_.forward(normalize(x)).coeff(0);
}

Vector DeepBsdeModel::predict_g0_batch(const Matrix& x) const {
  if (x.cols() != dim()) throw ShapeError("points have the wrong dimension for this model");
  return g0_.forward_batch(normalize(x)).col(0);
}

bool DeepBsdeModel::operator==(const DeepBsdeModel& other) const {
  return spec_ == other.spec_ && g0_ == other.g0_ && grad0_ == other.grad0_ && step_ == other.step_ &&
         milstein_ == other.milstein_ && lm_ == other.lm_;
}

}  // namespace kolmo::bsde
