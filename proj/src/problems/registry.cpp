#include "kolmo/problems/registry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "kolmo/util/errors.hpp"

namespace kolmo::problems {
namespace {

using sde::Diffusion;

Vector constant_point(int d, double v) { return Vector::Constant(d, v); }

Diffusion constant_diagonal(int d, double c) {
  return Diffusion::diagonal(
      d, [c](int, double, double) { return c; }, [](int, double, double) { return 0.0; });
}

sde::Dynamics::DriftFn zero_drift() {
  return [](const Vector& x, double) { return Vector::Zero(x.size()).eval(); };
}

sde::Dynamics::DriftFn linear_drift(double mu) {
  return [mu](const Vector& x, double) { return (mu * x).eval(); };
}

Vector row_min(const Matrix& x) { return x.rowwise().minCoeff(); }

// f depending on y only, given value and derivative.
Nonlinearity scalar_nonlinearity(std::function<double(double)> f, std::function<double(double)> df) {
  Nonlinearity out;
  out.value = [f](double, const Matrix&, const Vector& y, const Matrix&) { return y.unaryExpr(f).eval(); };
  out.partials = [df](double, const Matrix& x, const Vector& y, const Matrix&, Vector& dy, Matrix& dz) {
    dy = y.unaryExpr(df);
    dz = Matrix::Zero(x.rows(), x.cols());
  };
  return out;
}

struct Builder {
  std::string name;
  Overrides params;  // defaults, overwritten by user overrides
  std::function<void(PdeProblem&, const Overrides&)> fill;
};

const std::vector<std::string> kCommonKeys = {"d", "T", "N", "x0", "lo", "hi", "lr", "steps"};

double get(const Overrides& p, const std::string& key) { return p.at(key); }

int get_dim(const Overrides& p) {
  const double d = get(p, "d");
  if (d < 1 || d != std::floor(d)) throw RegistryError("override d must be a positive integer");
  return static_cast<int>(d);
}

std::vector<Builder> make_builders() {
  std::vector<Builder> out;

  out.push_back({"bs_default",
                 {{"d", 100}, {"T", 1.0}, {"N", 40}, {"x0", 100}, {"lo", 99}, {"hi", 101}, {"lr", 0.008},
                  {"steps", 6000}, {"delta", 2.0 / 3.0}, {"R", 0.02}, {"mu_bar", 0.02}, {"sigma_bar", 0.2},
                  {"v_h", 50}, {"v_l", 70}, {"gamma_h", 0.2}, {"gamma_l", 0.02}},
                 [](PdeProblem& p, const Overrides& o) {
                   const double sigma = get(o, "sigma_bar");
                   const double delta = get(o, "delta");
                   const double rate = get(o, "R");
                   const DefaultIntensityParams q{get(o, "v_h"), get(o, "v_l"), get(o, "gamma_h"),
                                                  get(o, "gamma_l")};
                   if (q.v_h == q.v_l) throw RegistryError("bs_default needs v_h != v_l");
                   p.dynamics.drift = linear_drift(get(o, "mu_bar"));
                   p.dynamics.diffusion = Diffusion::diagonal(
                       p.dim, [sigma](int, double xi, double) { return sigma * xi; },
                       [sigma](int, double, double) { return sigma; });
                   p.nonlinearity = scalar_nonlinearity(
                       [=](double y) { return -(1.0 - delta) * default_intensity_q(y, q) * y - rate * y; },
                       [=](double y) {
                         return -(1.0 - delta) *
                                    (default_intensity_q_derivative(y, q) * y + default_intensity_q(y, q)) -
                                rate;
                       });
                   p.terminal = row_min;
                   p.input_shift = get(o, "x0");
                   p.input_scale = sigma * get(o, "x0");
                   p.references.push_back({constant_point(p.dim, 100.0), 0.0, 57.300, "multilevel Picard"});
                 }});

  out.push_back({"bs_exp",
                 {{"d", 100}, {"T", 0.5}, {"N", 40}, {"x0", 50}, {"lo", 49.995}, {"hi", 50.005}, {"lr", 0.008},
                  {"steps", 6000}},
                 [](PdeProblem& p, const Overrides& o) {
                   p.dynamics.drift = linear_drift(1.0);
                   p.dynamics.diffusion = Diffusion::diagonal(
                       p.dim, [](int, double xi, double) { return xi; }, [](int, double, double) { return 1.0; });
                   p.nonlinearity = scalar_nonlinearity([](double y) { return std::exp(-y); },
                                                        [](double y) { return -std::exp(-y); });
                   p.terminal = row_min;
                   p.input_shift = get(o, "x0");
                   p.input_scale = get(o, "x0");
                   p.references.push_back({constant_point(p.dim, 50.0), 0.0, 11.882, "multilevel Picard"});
                 }});

  auto allen_cahn_terminal = [](const Matrix& x) {
    return (1.0 / (2.0 + 0.4 * x.rowwise().squaredNorm().array())).matrix().eval();
  };
  auto allen_cahn_f = [](double eps) {
    const double k = 1.0 / (eps * eps);
    return scalar_nonlinearity([k](double y) { return k * (y - y * y * y); },
                               [k](double y) { return k * (1.0 - 3.0 * y * y); });
  };

  out.push_back({"allen_cahn",
                 {{"d", 100}, {"T", 0.3}, {"N", 20}, {"x0", 0}, {"lo", -0.5}, {"hi", 0.5}, {"lr", 0.005},
                  {"steps", 4000}, {"epsilon", 1.0}},
                 [=](PdeProblem& p, const Overrides& o) {
                   p.dynamics.drift = zero_drift();
                   p.dynamics.diffusion = constant_diagonal(p.dim, std::sqrt(2.0));
                   p.nonlinearity = allen_cahn_f(get(o, "epsilon"));
                   p.terminal = allen_cahn_terminal;
                   p.input_shift = get(o, "x0");
                   p.input_scale = 1.0;
                 }});

  out.push_back({"allen_cahn_xdiff",
                 {{"d", 100}, {"T", 0.15}, {"N", 40}, {"x0", 0.0005}, {"lo", 0.0004}, {"hi", 0.0006}, {"lr", 0.001},
                  {"steps", 3000}, {"epsilon", 1.0}},
                 [=](PdeProblem& p, const Overrides& o) {
                   const double s = std::sqrt(2.0);
                   p.dynamics.drift = zero_drift();
                   p.dynamics.diffusion = Diffusion::diagonal(
                       p.dim, [s](int, double xi, double) { return s * xi; }, [s](int, double, double) { return s; });
                   p.nonlinearity = allen_cahn_f(get(o, "epsilon"));
                   p.terminal = allen_cahn_terminal;
                   p.input_shift = get(o, "x0");
                   p.input_scale = std::max(std::abs(get(o, "x0")), 1e-12);
                   p.references.push_back({constant_point(p.dim, 0.0005), 0.0, 0.55706,
                                           "multilevel Picard, forward time t = 0.15"});
                 }});

  out.push_back({"nonlinear_diffusion",
                 {{"d", 10}, {"T", 0.01}, {"N", 40}, {"x0", 0.5}, {"lo", 0}, {"hi", 1}, {"lr", 0.005},
                  {"steps", 3000}, {"sigma", 0.25}},
                 [](PdeProblem& p, const Overrides& o) {
                   const double sigma = get(o, "sigma");
                   const double diff = 0.5 * sigma * sigma;
                   const double inv_d = 1.0 / p.dim;
                   const double horizon = p.horizon;
                   p.params["D"] = diff;
                   p.dynamics.drift = zero_drift();
                   p.dynamics.diffusion = constant_diagonal(p.dim, sigma);
                   p.nonlinearity.value = [=](double, const Matrix&, const Vector& y, const Matrix& z) {
                     return ((2.0 * diff * y.array() - inv_d - diff) * z.rowwise().sum().array() / sigma)
                         .matrix()
                         .eval();
                   };
                   p.nonlinearity.partials = [=](double, const Matrix&, const Vector& y, const Matrix& z, Vector& dy,
                                                 Matrix& dz) {
                     dy = (2.0 * diff / sigma) * z.rowwise().sum();
                     const Vector coef = (2.0 * diff * y.array() - inv_d - diff) / sigma;
                     dz = coef.replicate(1, z.cols());
                   };
                   p.terminal = [horizon](const Matrix& x) {
                     return (1.0 / (1.0 + (-horizon - x.rowwise().sum().array()).exp())).matrix().eval();
                   };
                   const int d = p.dim;
                   p.exact = [d](const Vector& x, double t) { return exact_nonlinear_diffusion(x, t, d); };
                   p.input_shift = 0.5;
                   p.input_scale = 0.5;
                 }});

  auto hjb_terminal = [](const Matrix& x) {
    return ((1.0 + x.rowwise().squaredNorm().array()) / 2.0).log().matrix().eval();
  };

  out.push_back({"hjb",
                 {{"d", 100}, {"T", 1.0}, {"N", 20}, {"x0", 0}, {"lo", -1}, {"hi", 1}, {"lr", 0.01},
                  {"steps", 3000}, {"lambda", 1.0}},
                 [=](PdeProblem& p, const Overrides& o) {
                   const double lambda = get(o, "lambda");
                   p.dynamics.drift = zero_drift();
                   p.dynamics.diffusion = constant_diagonal(p.dim, std::sqrt(2.0));
                   p.nonlinearity.value = [lambda](double, const Matrix&, const Vector&, const Matrix& z) {
                     return (-0.5 * lambda * z.rowwise().squaredNorm()).eval();
                   };
                   p.nonlinearity.partials = [lambda](double, const Matrix&, const Vector& y, const Matrix& z,
                                                      Vector& dy, Matrix& dz) {
                     dy = Vector::Zero(y.size());
                     dz = -lambda * z;
                   };
                   p.terminal = hjb_terminal;
                   p.input_shift = get(o, "x0");
                   p.input_scale = std::sqrt(2.0 * p.horizon);
                   if (p.dim == 100 && lambda == 1.0 && p.horizon == 1.0 && get(o, "x0") == 0.0) {
                     p.references.push_back({constant_point(p.dim, 0.0), 0.0, 4.590, "Monte Carlo"});
                   }
                 }});

  out.push_back({"hjb_xdiff",
                 {{"d", 100}, {"T", 1.0}, {"N", 40}, {"x0", 50}, {"lo", 49}, {"hi", 51}, {"lr", 0.008},
                  {"steps", 6000}, {"lambda", 1.0}},
                 [=](PdeProblem& p, const Overrides& o) {
                   const double lambda = get(o, "lambda");
                   const double s = std::sqrt(2.0);
                   p.dynamics.drift = zero_drift();
                   p.dynamics.diffusion = Diffusion::diagonal(
                       p.dim, [s](int, double xi, double) { return s * std::abs(xi); },
                       [s](int, double xi, double) { return xi >= 0.0 ? s : -s; });
                   p.nonlinearity.value = [lambda](double, const Matrix& x, const Vector&, const Matrix& z) {
                     return (-0.5 * lambda * (z.array().square() / x.array().square()).rowwise().sum()).matrix().eval();
                   };
                   p.nonlinearity.partials = [lambda](double, const Matrix& x, const Vector& y, const Matrix& z,
                                                      Vector& dy, Matrix& dz) {
                     dy = Vector::Zero(y.size());
                     dz = (-lambda * z.array() / x.array().square()).matrix();
                   };
                   p.terminal = hjb_terminal;
                   p.input_shift = get(o, "x0");
                   p.input_scale = get(o, "x0");
                 }});

  out.push_back({"heat",
                 {{"d", 10}, {"T", 1.0}, {"N", 20}, {"x0", 0.5}, {"lo", 0}, {"hi", 1}, {"lr", 0.005},
                  {"steps", 3000}},
                 [](PdeProblem& p, const Overrides&) {
                   p.dynamics.drift = zero_drift();
                   p.dynamics.diffusion = constant_diagonal(p.dim, 1.0);
                   p.nonlinearity = Nonlinearity::zero();
                   p.terminal = [](const Matrix& x) { return x.rowwise().squaredNorm().eval(); };
                   const int d = p.dim;
                   const double horizon = p.horizon;
                   p.exact = [d, horizon](const Vector& x, double t) { return exact_heat(x, horizon - t, d); };
                   p.input_shift = 0.5;
                   p.input_scale = 1.0;
                 }});

  out.push_back({"gbm",
                 {{"d", 100}, {"T", 1.0}, {"N", 40}, {"x0", 100}, {"lo", 90}, {"hi", 110}, {"lr", 0.001},
                  {"steps", 20000}, {"r", 0.05}, {"strike", 100}},
                 [](PdeProblem& p, const Overrides& o) {
                   const double r = get(o, "r");
                   const double mu = r - 0.1;
                   const double strike = get(o, "strike");
                   const double discount = std::exp(-r * p.horizon);
                   p.params["mu"] = mu;
                   // sigma_i = 1/10 + i/200 for i = 1..d
                   p.dynamics.drift = linear_drift(mu);
                   p.dynamics.diffusion = Diffusion::diagonal(
                       p.dim, [](int i, double xi, double) { return (0.1 + (i + 1) / 200.0) * xi; },
                       [](int i, double, double) { return 0.1 + (i + 1) / 200.0; });
                   p.nonlinearity = Nonlinearity::zero();
                   p.terminal = [discount, strike](const Matrix& x) {
                     return (discount * (x.rowwise().maxCoeff().array() - strike).max(0.0)).matrix().eval();
                   };
                   p.input_shift = get(o, "x0");
                   p.input_scale = 0.3 * get(o, "x0");
                 }});
  return out;
}

const std::vector<Builder>& builders() {
  static const std::vector<Builder> kBuilders = make_builders();
  return kBuilders;
}

const Builder& find_builder(const std::string& name) {
  for (const Builder& b : builders()) {
    if (b.name == name) return b;
  }
  std::string valid;
  for (const std::string& n : problem_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw RegistryError("unknown problem '" + name + "'; valid problems: " + valid);
}

}  // namespace

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> names;
    for (const Builder& b : builders()) names.push_back(b.name);
    return names;
  }();
  return kNames;
}

std::vector<std::string> allowed_overrides(const std::string& name) {
  std::vector<std::string> keys;
  for (const auto& [key, value] : find_builder(name).params) keys.push_back(key);
  return keys;
}

PdeProblem build_problem(const std::string& name, const Overrides& overrides) {
  const Builder& builder = find_builder(name);
  Overrides params = builder.params;
  for (const auto& [key, value] : overrides) {
    if (!params.count(key)) {
      std::string valid;
      for (const auto& [k, v] : params) valid += (valid.empty() ? "" : ", ") + k;
      throw RegistryError("unknown parameter '" + key + "' for problem '" + name + "'; valid keys: " + valid);
    }
    if (!std::isfinite(value)) throw RegistryError("parameter '" + key + "' must be finite");
    params[key] = value;
  }

  PdeProblem p;
  p.name = name;
  p.dim = get_dim(params);
  p.horizon = get(params, "T");
  if (!(p.horizon > 0.0)) throw RegistryError("override T must be positive");
  const double n = get(params, "N");
  if (n < 1 || n != std::floor(n)) throw RegistryError("override N must be a positive integer");
  p.default_steps = static_cast<int>(n);
  p.x0 = constant_point(p.dim, get(params, "x0"));
  p.domain_lo = get(params, "lo");
  p.domain_hi = get(params, "hi");
  if (!(p.domain_lo < p.domain_hi)) throw RegistryError("sampling box needs lo < hi");
  p.default_lr = get(params, "lr");
  p.default_train_steps = static_cast<int>(get(params, "steps"));
  p.dynamics.dim = p.dim;
  p.params = params;
  builder.fill(p, params);
  // Reference values are dropped once an equation parameter changes.
  static const std::set<std::string> kNumericalKeys = {"N", "lo", "hi", "lr", "steps", "x0"};
  for (const auto& [key, value] : overrides) {
    if (!kNumericalKeys.count(key) && value != builder.params.at(key)) p.references.clear();
  }
  return p;
}

double default_intensity_q(double y, const DefaultIntensityParams& q) {
  if (q.v_h == q.v_l) throw ContractError("default intensity needs v_h != v_l");
  const double slope = (q.gamma_h - q.gamma_l) / (q.v_h - q.v_l);
  const double inner = std::max(y - q.v_h, 0.0) * slope + q.gamma_h - q.gamma_l;
  return std::max(inner, 0.0) + q.gamma_l;
}

double default_intensity_q_derivative(double y, const DefaultIntensityParams& q) {
  if (q.v_h == q.v_l) throw ContractError("default intensity needs v_h != v_l");
  const double slope = (q.gamma_h - q.gamma_l) / (q.v_h - q.v_l);
  if (y <= q.v_h) return 0.0;
  const double inner = (y - q.v_h) * slope + q.gamma_h - q.gamma_l;
  return inner > 0.0 ? slope : 0.0;
}

double exact_nonlinear_diffusion(const Vector& x, double t, int d) {
  if (x.size() != d) throw ShapeError("point dimension does not match d");
  return 1.0 / (1.0 + std::exp(-t - x.sum()));
}

double exact_heat(const Vector& x, double t, int d) {
  if (x.size() != d) throw ShapeError("point dimension does not match d");
  return x.squaredNorm() + t * d;
}

CanonicalForm canonical_form_map(const std::string& name) {
  find_builder(name);
  if (name == "bs_default")
    return {name, "mu_bar x", "sigma_bar diag(x)", "-(1 - delta) Q(y) y - R y", "min_i x_i", false, false};
  if (name == "bs_exp") return {name, "x", "diag(x)", "exp(-y)", "min_i x_i", false, false};
  if (name == "allen_cahn")
    return {name, "0", "sqrt(2) I", "eps^-2 (y - y^3)", "1 / (2 + 0.4 |x|^2)", false, false};
  if (name == "allen_cahn_xdiff")
    return {name, "0", "sqrt(2) diag(x)", "eps^-2 (y - y^3)", "1 / (2 + 0.4 |x|^2)", false, false};
  if (name == "nonlinear_diffusion")
    return {name, "0", "sqrt(2 D) I", "(2 D y - 1/d - D) sum_i z_i / sqrt(2 D)", "1 / (1 + exp(-T - sum_i x_i))",
            false, true};
  if (name == "hjb") return {name, "0", "sqrt(2) I", "-(lambda / 2) |z|^2", "ln((1 + |x|^2) / 2)", false, true};
  if (name == "hjb_xdiff")
    return {name, "0", "sqrt(2) diag(|x|)", "-lambda sum_i z_i^2 / (2 x_i^2)", "ln((1 + |x|^2) / 2)", false, true};
  if (name == "heat") return {name, "0", "I", "0", "|x|^2", true, false};
  return {name, "mu x", "diag(sigma_i x_i)", "0", "exp(-r T) max(max_i x_i - strike, 0)", true, false};
}

std::string registry_table() {
  std::ostringstream out;
  out << std::left << std::setw(21) << "name" << std::setw(5) << "d" << std::setw(7) << "T" << std::setw(5) << "N"
      << std::setw(8) << "exact" << "reference\n";
  for (const std::string& name : problem_names()) {
    const PdeProblem p = build_problem(name);
    std::ostringstream ref;
    if (!p.references.empty()) ref << p.references.front().value << " (" << p.references.front().source << ")";
    out << std::left << std::setw(21) << name << std::setw(5) << p.dim << std::setw(7) << p.horizon << std::setw(5)
        << p.default_steps << std::setw(8) << (p.has_exact() ? "yes" : "no") << (ref.str().empty() ? "-" : ref.str())
        << '\n';
  }
  return out.str();
}

}  // namespace kolmo::problems
