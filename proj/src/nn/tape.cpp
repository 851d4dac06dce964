#include "kolmo/nn/tape.hpp"

#include <memory>

#include "kolmo/util/errors.hpp"

namespace kolmo::nn {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
}

}  // namespace

Tape::Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
    throw ContractError("tape variable " + std::to_string(v.id) + " does not exist");
  }
  return nodes_[v.id];
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

Matrix Tape::adjoint(Var v) const {
  const Node& n = node(v);
  if (n.adjoint.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.adjoint;
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Tape::Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::Var Tape::parameter(const Matrix& value, Matrix& grad) {
  require_same_shape(value, grad, "parameter");
  Node n;
  n.value = value;
  n.requires_grad = true;
  n.external_grad = &grad;
  return push(std::move(n));
}

Tape::Var Tape::custom(const std::vector<Var>& inputs, Matrix value, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (Var in : inputs) {
    n.requires_grad = n.requires_grad || node(in).requires_grad;
    n.inputs.push_back(in.id);
  }
  n.backward = std::move(backward);
  return push(std::move(n));
}

Tape::Var Tape::mlp(Mlp& net, Var input) {
  const Matrix& x = value(input);
  if (x.cols() != net.input_dim()) {
    throw ShapeError("network '" + net.name() + "' expects " + std::to_string(net.input_dim()) +
                     " input columns, got " + std::to_string(x.cols()));
  }
  // Layer inputs (post-activation) and hidden pre-activations for the reverse pass.
  auto layer_in = std::make_shared<std::vector<Matrix>>();
  auto pre = std::make_shared<std::vector<Matrix>>();
  const int layers = net.layer_count();
  layer_in->reserve(layers);
  pre->reserve(layers);
  Matrix h = x;
  for (int l = 0; l < layers; ++l) {
    Matrix z = h * net.weight(l).transpose();
    z.rowwise() += net.bias(l).transpose();
    layer_in->push_back(std::move(h));
    if (l + 1 < layers) {
      pre->push_back(z);
      h = z.cwiseMax(0.0);
    } else {
      h = std::move(z);
    }
  }
  Node n;
  n.value = std::move(h);
  n.requires_grad = true;
  n.inputs = {input.id};
  Mlp* owner = &net;
  n.backward = [owner, layer_in, pre](const Matrix& out_adj, std::vector<Matrix*>& in_adj) {
    Matrix g = out_adj;
    for (int l = owner->layer_count() - 1; l >= 0; --l) {
      if (l + 1 < owner->layer_count()) {
        // subgradient 0 at the kink
        g = g.cwiseProduct(((*pre)[l].array() > 0.0).cast<double>().matrix());
      }
      owner->weight_grad(l).noalias() += g.transpose() * (*layer_in)[l];
      owner->bias_grad(l).noalias() += g.colwise().sum().transpose();
      if (l > 0 || in_adj[0] != nullptr) {
        Matrix next = g * owner->weight(l);
        g = std::move(next);
      }
    }
    if (in_adj[0] != nullptr) *in_adj[0] += g;
  };
  return push(std::move(n));
}

Tape::Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  return custom({a, b}, value(a) + value(b), [](const Matrix& g, std::vector<Matrix*>& in) {
    if (in[0]) *in[0] += g;
    if (in[1]) *in[1] += g;
  });
}

Tape::Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  return custom({a, b}, value(a) - value(b), [](const Matrix& g, std::vector<Matrix*>& in) {
    if (in[0]) *in[0] += g;
    if (in[1]) *in[1] -= g;
  });
}

Tape::Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  Matrix av = value(a);
  Matrix bv = value(b);
  Matrix out = av.cwiseProduct(bv);
  return custom({a, b}, std::move(out),
                [av = std::move(av), bv = std::move(bv)](const Matrix& g, std::vector<Matrix*>& in) {
                  if (in[0]) *in[0] += g.cwiseProduct(bv);
                  if (in[1]) *in[1] += g.cwiseProduct(av);
                });
}

Tape::Var Tape::scale(Var a, double c) {
  return custom({a}, c * value(a), [c](const Matrix& g, std::vector<Matrix*>& in) {
    if (in[0]) *in[0] += c * g;
  });
}

Tape::Var Tape::add_const(Var a, const Matrix& c) {
  require_same_shape(value(a), c, "add_const");
  return custom({a}, value(a) + c, [](const Matrix& g, std::vector<Matrix*>& in) {
    if (in[0]) *in[0] += g;
  });
}

Tape::Var Tape::mul_const(Var a, const Matrix& c) {
  require_same_shape(value(a), c, "mul_const");
  return custom({a}, value(a).cwiseProduct(c), [c](const Matrix& g, std::vector<Matrix*>& in) {
    if (in[0]) *in[0] += g.cwiseProduct(c);
  });
}

Tape::Var Tape::row_dot(Var a, const Matrix& c) {
  require_same_shape(value(a), c, "row_dot");
  Matrix out = value(a).cwiseProduct(c).rowwise().sum();
  return custom({a}, std::move(out), [c](const Matrix& g, std::vector<Matrix*>& in) {
    if (in[0]) in[0]->noalias() += g.asDiagonal() * c;
  });
}

Tape::Var Tape::map(Var a, const std::function<double(double)>& f,
                    const std::function<double(double)>& df) {
  const Matrix& x = value(a);
  Matrix out = x.unaryExpr(f);
  Matrix slope = x.unaryExpr(df);
  return custom({a}, std::move(out), [slope = std::move(slope)](const Matrix& g, std::vector<Matrix*>& in) {
    if (in[0]) *in[0] += g.cwiseProduct(slope);
  });
}

Tape::Var Tape::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  return custom({a}, std::move(out), [](const Matrix& g, std::vector<Matrix*>& in) {
    if (in[0]) in[0]->array() += g(0, 0);
  });
}

Tape::Var Tape::mean_squared_error(Var prediction, const Matrix& target) {
  const Matrix& p = value(prediction);
  require_same_shape(p, target, "mean_squared_error");
  if (p.cols() != 1) throw ShapeError("mean_squared_error expects a single column");
  Matrix residual = p - target;
  const double n = static_cast<double>(p.rows());
  Matrix out(1, 1);
  out(0, 0) = residual.squaredNorm() / n;
  return custom({prediction}, std::move(out),
                [residual = std::move(residual), n](const Matrix& g, std::vector<Matrix*>& in) {
                  if (in[0]) *in[0] += (2.0 * g(0, 0) / n) * residual;
                });
}

void Tape::backward(Var loss) {
  if (nodes_.empty()) throw ContractError("backward called on an empty tape (no forward pass recorded)");
  node(loss);
  Node& root = nodes_[loss.id];
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ShapeError("backward expects a scalar loss, got " + std::to_string(root.value.rows()) + "x" +
                     std::to_string(root.value.cols()));
  }
  for (Node& n : nodes_) n.adjoint.resize(0, 0);
  root.adjoint = Matrix::Ones(1, 1);

  std::vector<Matrix*> in_adj;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.adjoint.size() == 0) continue;
    if (n.external_grad != nullptr) *n.external_grad += n.adjoint;
    if (!n.backward) continue;
    in_adj.assign(n.inputs.size(), nullptr);
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      Node& in = nodes_[n.inputs[k]];
      if (!in.requires_grad) continue;
      if (in.adjoint.size() == 0) in.adjoint = Matrix::Zero(in.value.rows(), in.value.cols());
      in_adj[k] = &in.adjoint;
    }
    n.backward(n.adjoint, in_adj);
  }
}

}  // namespace kolmo::nn
