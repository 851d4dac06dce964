#pragma once

#include <functional>
#include <vector>

#include "kolmo/nn/mlp.hpp"

namespace kolmo::nn {

/// Reverse-mode recorder for the batched computations used by the rollouts.
///
/// Every recorded value is a matrix with one row per sample. Nodes are appended
/// in evaluation order, so a reverse sweep over the node list is a valid
/// topological order. Parameter adjoints are *accumulated* into the owning
/// buffers (Mlp gradient matrices or parameter leaves); callers zero them first.
class Tape {
 public:
  struct Var {
    int id = -1;
  };

  // Receives the output adjoint and the adjoint buffers of the inputs. A buffer
  // pointer is null when that input does not need a gradient.
  using BackwardFn = std::function<void(const Matrix& out_adjoint, std::vector<Matrix*>& in_adjoints)>;

  Var constant(Matrix value);
  /// Leaf bound to external storage; its adjoint is added into `grad` by backward().
  Var parameter(const Matrix& value, Matrix& grad);

  Var mlp(Mlp& net, Var input);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var add_const(Var a, const Matrix& c);
  Var mul_const(Var a, const Matrix& c);
  /// Row-wise inner product with a constant of the same shape; result is (rows x 1).
  Var row_dot(Var a, const Matrix& c);
  Var map(Var a, const std::function<double(double)>& f, const std::function<double(double)>& df);
  /// Sum of all entries, (1 x 1).
  Var sum(Var a);
  /// mean over rows of (prediction - target)^2 for a single-column prediction.
  Var mean_squared_error(Var prediction, const Matrix& target);

  Var custom(const std::vector<Var>& inputs, Matrix value, BackwardFn backward);

  const Matrix& value(Var v) const;
  /// Adjoint after backward(); a zero matrix for nodes that were never reached.
  Matrix adjoint(Var v) const;
  bool requires_grad(Var v) const;

  /// Reverse sweep from a (1 x 1) node. Throws ContractError on an empty tape.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Matrix value;
    Matrix adjoint;  // allocated lazily during backward
    bool requires_grad = false;
    std::vector<int> inputs;
    BackwardFn backward;
    Matrix* external_grad = nullptr;
  };

  Var push(Node node);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace kolmo::nn
