#include "kolmo/linear_fk/linear_fk.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iterator>
#include <random>
#include <sstream>

#include "kolmo/bsde/model_io.hpp"
#include "kolmo/nn/adam.hpp"
#include "kolmo/nn/tape.hpp"
#include "kolmo/sde/path_batch.hpp"
#include "kolmo/sde/random.hpp"
#include "kolmo/util/errors.hpp"
#include "kolmo/util/files.hpp"

namespace kolmo::linear_fk {
namespace {

using sde::StreamTag;
using sde::stream_key;

Matrix uniform_box(int rows, int d, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> box(lo, hi);
  Matrix x(rows, d);
  for (int p = 0; p < rows; ++p) {
    for (int i = 0; i < d; ++i) x(p, i) = box(rng);
  }
  return x;
}

}  // namespace

void LinearFkConfig::validate() const {
  if (!(lo < hi)) throw ConfigError("linear solver needs lo < hi");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (time_steps < 1) throw ConfigError("N must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("checkpoint cadence must be >= 1");
  if (scheme == sde::Scheme::kLm) throw ConfigError("the linear solver supports the em and milstein schemes");
  bsde::TrainConfig probe;
  probe.schedule = schedule;
  probe.validate();
}

LinearFkConfig default_linear_config(const PdeProblem& problem) {
  LinearFkConfig c;
  c.lo = problem.domain_lo;
  c.hi = problem.domain_hi;
  c.time_steps = problem.default_steps;
  c.horizon = problem.horizon;
  c.steps = problem.default_train_steps;
  c.schedule = {{0, problem.default_lr}};
  return c;
}

double LinearModel::predict(const Vector& x) const {
  return net.forward(((x.array() - input_shift) / input_scale).matrix()).coeff(0);
}

Vector LinearModel::predict_batch(const Matrix& x) const {
  return net.forward_batch(((x.array() - input_shift) / input_scale).matrix()).col(0);
}

std::string serialize_linear_model(const LinearModel& model) {
  char buf[64];
  std::string out = "kolmo-linear 1\n";
  std::snprintf(buf, sizeof buf, "input_shift %a\n", model.input_shift);
  out += buf;
  std::snprintf(buf, sizeof buf, "input_scale %a\n", model.input_scale);
  out += buf;
  return out + bsde::serialize_mlp(model.net);
}

LinearModel deserialize_linear_model(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  std::string value;
  auto expect = [&](const std::string& key) {
    if (!(in >> tag >> value) || tag != key) throw ContractError("linear model file: expected '" + key + "'");
    return value;
  };
  if (expect("kolmo-linear") != "1") throw ContractError("unsupported linear model format version " + value);
  auto number = [](const std::string& token) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') throw ContractError("malformed number '" + token + "' in model file");
    return v;
  };
  LinearModel model;
  model.input_shift = number(expect("input_shift"));
  model.input_scale = number(expect("input_scale"));
  std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  model.net = bsde::deserialize_mlp(rest);
  return model;
}

LinearResult train_linear(const PdeProblem& problem, const LinearFkConfig& config) {
  if (!problem.nonlinearity.identically_zero) {
    throw ContractError("problem '" + problem.name + "' has a nonzero nonlinearity; use the deep BSDE trainer");
  }
  config.validate();
  sde::require_scheme_support(problem.dynamics, config.scheme);
  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count(); };

  const sde::TimeGrid grid(config.horizon, config.time_steps);
  const int d = problem.dim;
  std::mt19937_64 init_rng = sde::substream(config.seed, stream_key(StreamTag::kNetworkInit), 0);
  LinearResult result;
  result.model.net = Mlp::init(nn::standard_widths(d, 1), init_rng, config.init, "terminal");
  result.model.input_shift = problem.input_shift;
  result.model.input_scale = problem.input_scale;
  Mlp& net = result.model.net;
  bsde::ExperimentReport& report = result.report;
  report.problem = problem.name;
  report.scheme = sde::scheme_name(config.scheme);
  report.seed = config.seed;

  if (config.pilot_init) {
    std::mt19937_64 rng = sde::substream(config.seed, stream_key(StreamTag::kPilot), 1);
    const Matrix x0 = uniform_box(256, d, config.lo, config.hi, rng);
    const sde::PathBatch pilot =
        sde::simulate_batch(problem.dynamics, config.scheme, x0, grid, config.seed, stream_key(StreamTag::kPilot));
    const double shift = problem.terminal(pilot.states.back()).mean() - result.model.predict_batch(x0).mean();
    net.bias(net.layer_count() - 1)(0) += shift;
  }

  nn::Adam adam(net.params());
  const Vector probe = problem.x0;
  for (int step = 0; step < config.steps; ++step) {
    std::mt19937_64 rng =
        sde::substream(config.seed, stream_key(StreamTag::kInitialPoints, static_cast<std::uint64_t>(step)), 1);
    const Matrix x0 = uniform_box(config.batch, d, config.lo, config.hi, rng);
    const sde::PathBatch paths = sde::simulate_batch(problem.dynamics, config.scheme, x0, grid, config.seed,
                                                     stream_key(StreamTag::kIncrements, static_cast<std::uint64_t>(step)));
    const Matrix target = problem.terminal(paths.states.back());
    net.zero_grad();
    nn::Tape tape;
    const auto input = tape.constant(((x0.array() - result.model.input_shift) / result.model.input_scale).matrix());
    const auto loss = tape.mean_squared_error(tape.mlp(net, input), target);
    const double loss_value = tape.value(loss)(0, 0);
    if (!std::isfinite(loss_value)) throw TrainingDiverged("linear training loss is not finite", step);
    tape.backward(loss);
    const double lr = bsde::lr_at(config.schedule, step);
    adam.step(lr);
    const int done = step + 1;
    if (done % config.checkpoint_every == 0 || done == config.steps) {
      report.curve.push_back({done, loss_value, result.model.predict(probe), lr, elapsed()});
    }
  }
  report.final_estimate = result.model.predict(probe);
  report.wall_s = elapsed();
  return result;
}

GbmParams GbmParams::standard(int d) {
  GbmParams p;
  p.r = 1.0 / 20.0;
  p.mu = p.r - 1.0 / 10.0;
  p.horizon = 1.0;
  for (int i = 1; i <= d; ++i) p.sigma.push_back(0.1 + i / 200.0);
  return p;
}

GbmParams GbmParams::from_problem(const PdeProblem& problem) {
  if (problem.name != "gbm") throw ContractError("problem '" + problem.name + "' is not the gbm benchmark");
  GbmParams p = standard(problem.dim);
  p.r = problem.params.at("r");
  p.mu = problem.params.at("mu");
  p.horizon = problem.horizon;
  const double strike = problem.params.at("strike");
  const double discount = std::exp(-p.r * p.horizon);
  p.payoff = [strike, discount](const Vector& x) { return discount * std::max(x.maxCoeff() - strike, 0.0); };
  return p;
}

double GbmParams::evaluate_payoff(const Vector& x) const {
  if (payoff) return payoff(x);
  return std::exp(-r * horizon) * std::max(x.maxCoeff() - 100.0, 0.0);
}

McEstimate gbm_reference(const Vector& x, double t, const GbmParams& params, long n_mc, std::uint64_t seed) {
  if (n_mc < 1) throw ContractError("gbm_reference needs n_mc >= 1");
  const int d = static_cast<int>(x.size());
  if (static_cast<int>(params.sigma.size()) != d) throw ShapeError("sigma must have one entry per coordinate");
  const double remaining = params.horizon - t;
  McEstimate est;
  est.samples = n_mc;
  if (remaining <= 0.0) {
    est.value = params.evaluate_payoff(x);
    return est;
  }
  const double sd = std::sqrt(remaining);
  Vector drift(d);
  for (int i = 0; i < d; ++i) drift(i) = (params.mu - 0.5 * params.sigma[i] * params.sigma[i]) * remaining;
  std::mt19937_64 rng = sde::substream(seed, stream_key(StreamTag::kReference), 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  double mean = 0.0;
  double m2 = 0.0;
  Vector xt(d);
  for (long k = 0; k < n_mc; ++k) {
    const double shared = params.shared_noise ? normal(rng) : 0.0;
    for (int i = 0; i < d; ++i) {
      const double w = sd * (params.shared_noise ? shared : normal(rng));
      xt(i) = x(i) * std::exp(params.sigma[i] * w + drift(i));
    }
    const double v = params.evaluate_payoff(xt);
    const double delta = v - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (v - mean);
  }
  const double n = static_cast<double>(n_mc);
  est.value = mean;
  if (n_mc > 1) est.std_error = std::sqrt(m2 / (n - 1.0) / n);
  return est;
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t hash) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::vector<double> cached_references(const std::filesystem::path& cache_dir, const std::string& problem_key,
                                      const Matrix& probes, long n_mc, std::uint64_t seed,
                                      const std::function<double(const Vector&, std::uint64_t)>& compute) {
  const std::uint64_t problem_hash = fnv1a(problem_key.data(), problem_key.size());
  const Eigen::Index shape[2] = {probes.rows(), probes.cols()};
  const std::uint64_t probe_hash = fnv1a(probes.data(), static_cast<std::size_t>(probes.size()) * sizeof(double),
                                         fnv1a(shape, sizeof(shape)));
  char name[128];
  std::snprintf(name, sizeof(name), "ref-%016llx-%016llx-%ld-%llu.txt",
                static_cast<unsigned long long>(problem_hash), static_cast<unsigned long long>(probe_hash), n_mc,
                static_cast<unsigned long long>(seed));
  const std::filesystem::path file = cache_dir.empty() ? std::filesystem::path() : cache_dir / name;
  if (!file.empty() && std::filesystem::exists(file)) {
    std::istringstream in(util::read_file(file));
    std::vector<double> values;
    std::string token;
    while (in >> token) values.push_back(std::strtod(token.c_str(), nullptr));
    if (static_cast<Eigen::Index>(values.size()) == probes.rows()) return values;
  }
  std::vector<double> values(probes.rows());
  for (Eigen::Index p = 0; p < probes.rows(); ++p) {
    values[p] = compute(probes.row(p).transpose(), seed + static_cast<std::uint64_t>(p));
  }
  if (!file.empty()) {
    std::ostringstream out;
    char buf[64];
    for (double v : values) {
      std::snprintf(buf, sizeof(buf), "%a\n", v);
      out << buf;
    }
    util::write_file_atomic(file, out.str());
  }
  return values;
}

}  // namespace kolmo::linear_fk
