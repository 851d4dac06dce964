#include "kolmo/sde/steppers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "kolmo/util/errors.hpp"

namespace kolmo::sde {

std::string scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::kEm:
      return "em";
    case Scheme::kMilstein:
      return "milstein";
    case Scheme::kLm:
      return "lm";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "em") return Scheme::kEm;
  if (lower == "milstein") return Scheme::kMilstein;
  if (lower == "lm") return Scheme::kLm;
  throw ContractError("unknown scheme '" + name + "' (expected em, milstein or lm)");
}

void check_finite_state(const Vector& y, int step) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y(i)) || std::abs(y(i)) > kBlowUpThreshold) {
      throw BlowUpError("state component " + std::to_string(i) + " blew up at step " + std::to_string(step),
                        -1, step);
    }
  }
}

void require_scheme_support(const Dynamics& dyn, Scheme scheme) {
  if (scheme != Scheme::kMilstein) return;
  if (!dyn.diffusion.has_jacobian()) {
    throw CapabilityError(
        "Milstein stepping needs the spatial Jacobian of B; use the em scheme or the learned "
        "Milstein correction instead");
  }
  if (!dyn.diffusion.commutative()) {
    throw ContractError("Milstein stepping refused: the diffusion is not flagged as commutative");
  }
}

Vector em_step(const Dynamics& dyn, const Vector& y, double t, double tau, const Vector& dw, int step) {
  Vector next = y + dyn.drift(y, t) * tau + dyn.diffusion.apply(y, t, dw);
  check_finite_state(next, step);
  return next;
}

Vector milstein_step(const Dynamics& dyn, const Vector& y, double t, double tau, const Vector& dw, int step) {
  require_scheme_support(dyn, Scheme::kMilstein);
  Vector next = y + dyn.drift(y, t) * tau + dyn.diffusion.apply(y, t, dw) +
                dyn.diffusion.milstein_correction(y, t, dw, tau);
  check_finite_state(next, step);
  return next;
}

Vector milstein_step_fd(const Dynamics& dyn, const Vector& y, double t, double tau, const Vector& dw,
                        int step) {
  const Matrix b = dyn.diffusion.matrix(y, t);
  const Jacobian jac = dyn.diffusion.jacobian_fd(y, t);
  const int d = dyn.dim;
  const Matrix s = dw * dw.transpose() - tau * Matrix::Identity(d, d);
  const Matrix sbt = s * b.transpose();
  Vector c = Vector::Zero(d);
  for (int k = 0; k < d; ++k) c.noalias() += jac[k] * sbt.col(k);
  Vector next = y + dyn.drift(y, t) * tau + b * dw + 0.5 * c;
  check_finite_state(next, step);
  return next;
}

Vector lm_step(const Dynamics& dyn, const Vector& y, double t, double tau, const Vector& dw,
               const Vector& dw_next, int step) {
  Vector next = y + dyn.drift(y, t) * tau + 0.5 * dyn.diffusion.apply(y, t, dw + dw_next);
  check_finite_state(next, step);
  return next;
}

}  // namespace kolmo::sde
