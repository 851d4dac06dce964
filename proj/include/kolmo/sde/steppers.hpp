#pragma once

#include <functional>
#include <string>

#include "kolmo/sde/diffusion.hpp"

namespace kolmo::sde {

enum class Scheme { kEm, kMilstein, kLm };

std::string scheme_name(Scheme scheme);
/// Accepts "em", "milstein", "lm" (case-insensitive). Throws ContractError otherwise.
Scheme parse_scheme(const std::string& name);

/// Coefficients of dX = A(X, t) dt + B(X, t) dW.
struct Dynamics {
  using DriftFn = std::function<Vector(const Vector& x, double t)>;

  int dim = 0;
  DriftFn drift;
  Diffusion diffusion;
};

// Any |component| above this aborts the step.
inline constexpr double kBlowUpThreshold = 1e12;

/// Throws BlowUpError (path -1) if `y` is non-finite or exceeds the threshold.
void check_finite_state(const Vector& y, int step);

Vector em_step(const Dynamics& dyn, const Vector& y, double t, double tau, const Vector& dw, int step = 0);

/// Throws CapabilityError without an analytic Jacobian and ContractError when
/// the diffusion is not flagged commutative.
Vector milstein_step(const Dynamics& dyn, const Vector& y, double t, double tau, const Vector& dw,
                     int step = 0);

/// Same as milstein_step but with the correction built from a finite-difference Jacobian.
Vector milstein_step_fd(const Dynamics& dyn, const Vector& y, double t, double tau, const Vector& dw,
                        int step = 0);

Vector lm_step(const Dynamics& dyn, const Vector& y, double t, double tau, const Vector& dw,
               const Vector& dw_next, int step = 0);

/// Throws unless `scheme` can be used with `dyn` (Milstein needs dB and the flag).
void require_scheme_support(const Dynamics& dyn, Scheme scheme);

}  // namespace kolmo::sde
