#pragma once

#include <map>
#include <string>
#include <vector>

#include "kolmo/problems/pde_problem.hpp"

namespace kolmo::problems {

using Overrides = std::map<std::string, double>;

/// Registered names in display order.
const std::vector<std::string>& problem_names();

/// Keys accepted by build_problem for `name`.
std::vector<std::string> allowed_overrides(const std::string& name);

/// Throws RegistryError for an unknown name or override key.
PdeProblem build_problem(const std::string& name, const Overrides& overrides = {});

struct DefaultIntensityParams {
  double v_h = 50.0;
  double v_l = 70.0;
  double gamma_h = 0.2;
  double gamma_l = 0.02;
};

/// Q(y) = ReLU(ReLU(y - v_h) (gamma_h - gamma_l) / (v_h - v_l) + gamma_h - gamma_l) + gamma_l.
/// Throws ContractError when v_h == v_l.
double default_intensity_q(double y, const DefaultIntensityParams& params);
/// dQ/dy, with one-sided derivative 0 at the kinks.
double default_intensity_q_derivative(double y, const DefaultIntensityParams& params);

/// 1 / (1 + exp(-t - sum x_i)). `d` must match x.size().
double exact_nonlinear_diffusion(const Vector& x, double t, int d);

/// ||x||^2 + t d, the forward-time heat solution started from ||x||^2.
double exact_heat(const Vector& x, double t, int d);

struct CanonicalForm {
  std::string name;
  std::string drift;
  std::string diffusion;
  std::string nonlinearity;
  std::string terminal;
  bool f_is_zero = false;
  bool f_depends_on_z = false;
};

/// Human-readable record of how each benchmark maps onto the canonical form.
CanonicalForm canonical_form_map(const std::string& name);

/// Fixed-width table of every registry entry.
std::string registry_table();

}  // namespace kolmo::problems
