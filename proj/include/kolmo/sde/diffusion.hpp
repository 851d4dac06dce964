#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace kolmo::sde {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// jac[k](i, j) = d B_ij / d x_k
using Jacobian = std::vector<Matrix>;

/// The diffusion tensor B(x, t) of dX = A dt + B dW, with an optional analytic
/// spatial Jacobian and the author-asserted commutativity flag.
///
/// Two layouts are supported. `diagonal` covers B = diag(b_i(x_i, t)), which is
/// every benchmark in the registry and has O(d) Milstein terms. `dense` takes a
/// full matrix callback and is used for general checks at small d.
class Diffusion {
 public:
  using MatrixFn = std::function<Matrix(const Vector& x, double t)>;
  using JacobianFn = std::function<Jacobian(const Vector& x, double t)>;
  // b(i, x_i, t) for the diagonal layout.
  using ComponentFn = std::function<double(int i, double xi, double t)>;

  Diffusion() = default;

  /// `db` may be empty, in which case the Milstein stepper is unavailable.
  static Diffusion diagonal(int dim, ComponentFn b, ComponentFn db, bool commutative = true);
  static Diffusion dense(int dim, MatrixFn b, JacobianFn db, bool commutative);

  int dim() const { return dim_; }
  bool is_diagonal() const { return diagonal_; }
  bool commutative() const { return commutative_; }
  bool has_jacobian() const;

  Matrix matrix(const Vector& x, double t) const;
  /// B(x, t) dw
  Vector apply(const Vector& x, double t, const Vector& dw) const;

  /// Analytic Jacobian; throws CapabilityError when none was supplied.
  Jacobian jacobian(const Vector& x, double t) const;
  /// Central differences with step 1e-5 (1 + |x_k|).
  Jacobian jacobian_fd(const Vector& x, double t) const;

  /// Milstein increment 1/2 sum_{j,k,l} B_kl d_k B_ij (dw_j dw_l - tau delta_jl).
  Vector milstein_correction(const Vector& x, double t, const Vector& dw, double tau) const;

  /// Coefficients m with  grad(g) . milstein_correction = 1/2 z . m  where
  /// z = B^T grad(g). Depends only on the path, so the BSDE correction stays
  /// linear in the network output. Diagonal layout: m_i = b_i' (dw_i^2 - tau).
  Vector milstein_coefficients(const Vector& x, double t, const Vector& dw, double tau) const;

  /// max |B B^T - B^T B| at one point.
  double normality_defect(const Vector& x, double t) const;

 private:
  Vector correction_sum(const Vector& x, double t, const Vector& dw, double tau) const;

  int dim_ = 0;
  bool diagonal_ = true;
  bool commutative_ = true;
  ComponentFn diag_b_;
  ComponentFn diag_db_;
  MatrixFn dense_b_;
  JacobianFn dense_db_;
};

/// Residual report for the commutativity condition
///   sum_k B_kj d_k B_il = sum_k B_kl d_k B_ij   for all i, j, l.
struct CommutativityReport {
  bool commutative = true;
  double max_residual = 0.0;
  int probes_checked = 0;
};

/// Evaluates both sides of the condition at every probe, using the analytic
/// Jacobian when present and central differences otherwise.
CommutativityReport check_commutativity(const Diffusion& diffusion, const std::vector<Vector>& probes,
                                        double tol, double t = 0.0);

}  // namespace kolmo::sde
