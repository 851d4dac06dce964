#include "kolmo/sde/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "kolmo/util/errors.hpp"

namespace kolmo::sde {

Diffusion Diffusion::diagonal(int dim, ComponentFn b, ComponentFn db, bool commutative) {
  Diffusion out;
  out.dim_ = dim;
  out.diagonal_ = true;
  out.commutative_ = commutative;
  out.diag_b_ = std::move(b);
  out.diag_db_ = std::move(db);
  return out;
}

Diffusion Diffusion::dense(int dim, MatrixFn b, JacobianFn db, bool commutative) {
  Diffusion out;
  out.dim_ = dim;
  out.diagonal_ = false;
  out.commutative_ = commutative;
  out.dense_b_ = std::move(b);
  out.dense_db_ = std::move(db);
  return out;
}

bool Diffusion::has_jacobian() const {
  return diagonal_ ? static_cast<bool>(diag_db_) : static_cast<bool>(dense_db_);
}

Matrix Diffusion::matrix(const Vector& x, double t) const {
  if (!diagonal_) return dense_b_(x, t);
  Matrix b = Matrix::Zero(dim_, dim_);
  for (int i = 0; i < dim_; ++i) b(i, i) = diag_b_(i, x(i), t);
  return b;
}

Vector Diffusion::apply(const Vector& x, double t, const Vector& dw) const {
  if (!diagonal_) return dense_b_(x, t) * dw;
  Vector out(dim_);
  for (int i = 0; i < dim_; ++i) out(i) = diag_b_(i, x(i), t) * dw(i);
  return out;
}

Jacobian Diffusion::jacobian(const Vector& x, double t) const {
  if (!has_jacobian()) {
    throw CapabilityError("diffusion has no analytic spatial Jacobian");
  }
  if (!diagonal_) return dense_db_(x, t);
  Jacobian jac(dim_, Matrix::Zero(dim_, dim_));
  for (int i = 0; i < dim_; ++i) jac[i](i, i) = diag_db_(i, x(i), t);
  return jac;
}

Jacobian Diffusion::jacobian_fd(const Vector& x, double t) const {
  Jacobian jac(dim_);
  Vector xp = x;
  for (int k = 0; k < dim_; ++k) {
    const double h = 1e-5 * (1.0 + std::abs(x(k)));
    xp(k) = x(k) + h;
    const Matrix plus = matrix(xp, t);
    xp(k) = x(k) - h;
    const Matrix minus = matrix(xp, t);
    xp(k) = x(k);
    jac[k] = (plus - minus) / (2.0 * h);
  }
  return jac;
}

// c_i = sum_{j,k,l} B_kl d_k B_ij (dw_j dw_l - tau delta_jl)
Vector Diffusion::correction_sum(const Vector& x, double t, const Vector& dw, double tau) const {
  if (diagonal_) {
    Vector c(dim_);
    for (int i = 0; i < dim_; ++i) {
      c(i) = diag_b_(i, x(i), t) * diag_db_(i, x(i), t) * (dw(i) * dw(i) - tau);
    }
    return c;
  }
  const Matrix b = dense_b_(x, t);
  const Jacobian jac = dense_db_(x, t);
  const Matrix s = dw * dw.transpose() - tau * Matrix::Identity(dim_, dim_);
  const Matrix sbt = s * b.transpose();  // (S B^T)_{jk} = sum_l S_jl B_kl
  Vector c = Vector::Zero(dim_);
  for (int k = 0; k < dim_; ++k) c.noalias() += jac[k] * sbt.col(k);
  return c;
}

Vector Diffusion::milstein_correction(const Vector& x, double t, const Vector& dw, double tau) const {
  if (!has_jacobian()) throw CapabilityError("Milstein correction needs the spatial Jacobian of B");
  return 0.5 * correction_sum(x, t, dw, tau);
}

Vector Diffusion::milstein_coefficients(const Vector& x, double t, const Vector& dw, double tau) const {
  if (!has_jacobian()) throw CapabilityError("Milstein correction needs the spatial Jacobian of B");
  if (diagonal_) {
    Vector m(dim_);
    for (int i = 0; i < dim_; ++i) m(i) = diag_db_(i, x(i), t) * (dw(i) * dw(i) - tau);
    return m;
  }
  const Vector c = correction_sum(x, t, dw, tau);
  Eigen::FullPivLU<Matrix> lu(dense_b_(x, t));
  if (!lu.isInvertible()) {
    throw CapabilityError("explicit Milstein BSDE term needs an invertible B to recover grad g from z");
  }
  return lu.solve(c);
}

double Diffusion::normality_defect(const Vector& x, double t) const {
  if (diagonal_) return 0.0;
  const Matrix b = dense_b_(x, t);
  return (b * b.transpose() - b.transpose() * b).cwiseAbs().maxCoeff();
}

CommutativityReport check_commutativity(const Diffusion& diffusion, const std::vector<Vector>& probes,
                                        double tol, double t) {
  CommutativityReport report;
  const int d = diffusion.dim();
  for (const Vector& x : probes) {
    const Matrix b = diffusion.matrix(x, t);
    const Jacobian jac = diffusion.has_jacobian() ? diffusion.jacobian(x, t) : diffusion.jacobian_fd(x, t);
    for (int i = 0; i < d; ++i) {
      // g(k, l) = d_k B_il ; lhs(j, l) = sum_k B_kj d_k B_il = (B^T g)_{jl}
      Matrix g(d, d);
      for (int k = 0; k < d; ++k) g.row(k) = jac[k].row(i);
      const Matrix lhs = b.transpose() * g;
      const double r = (lhs - lhs.transpose()).cwiseAbs().maxCoeff();
      report.max_residual = std::max(report.max_residual, r);
    }
    ++report.probes_checked;
  }
  report.commutative = report.max_residual <= tol;
  return report;
}

}  // namespace kolmo::sde
