#include "kolmo/eval/sweeps.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <chrono>
#include <cmath>
#include <ostream>

#include "kolmo/util/errors.hpp"

namespace kolmo::eval {

Vector exact_reference(const problems::PdeProblem& problem, const Matrix& probes) {
  if (!problem.has_exact()) {
    throw ContractError("problem '" + problem.name + "' has no exact solution; supply a reference");
  }
  Vector out(probes.rows());
  for (Eigen::Index m = 0; m < probes.rows(); ++m) out(m) = problem.exact(probes.row(m).transpose(), 0.0);
  return out;
}

SweepRow sweep_cell(const problems::PdeProblem& problem, sde::Scheme scheme, int points, const SweepConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  const Matrix probes =
      uniform_probes(config.probes, problem.dim, problem.domain_lo, problem.domain_hi, config.train.seed);
  const Vector reference = config.reference(problem, probes);
  std::vector<double> eps;
  for (int k = 0; k < config.repeats; ++k) {
    bsde::TrainConfig c = config.train;
    c.sampler = bsde::Sampler::kPointSet;
    c.points = points;
    c.seed = config.train.seed + static_cast<std::uint64_t>(k);
    c.horizon = problem.horizon;
    const bsde::TrainResult r = bsde::train(problem, scheme, c);
    eps.push_back(avg_relative_error(r.model.predict_g0_batch(probes), reference).mean);
  }
  const bsde::RepeatSummary s = bsde::summarize(eps);
  SweepRow row;
  row.d = problem.dim;
  row.points = points;
  row.eps_mean = s.mean;
  row.eps_std = s.std;
  row.seed = config.train.seed;
  row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return row;
}

namespace {

struct DimOutcome {
  std::vector<SweepRow> rows;
  int found = 0;
};

DimOutcome sweep_dimension(const ProblemFactory& factory, sde::Scheme scheme, int d,
                           const std::vector<int>& point_counts, double eps_target, const SweepConfig& config) {
  const problems::PdeProblem problem = factory(d);
  DimOutcome out;
  for (int points : point_counts) {
    SweepRow row = sweep_cell(problem, scheme, points, config);
    out.rows.push_back(row);
    if (row.eps_mean < eps_target) {
      out.found = points;
      break;
    }
  }
  if (out.found == 0) {
    for (SweepRow& row : out.rows) row.censored = true;
  }
  return out;
}

}  // namespace

SweepResult complexity_sweep(const ProblemFactory& factory, sde::Scheme scheme, const std::vector<int>& dims,
                             const std::vector<int>& point_counts, double eps_target, const SweepConfig& config,
                             int jobs) {
  if (dims.empty() || point_counts.empty()) throw ConfigError("sweep needs at least one d and one P");
  if (jobs < 1) throw ConfigError("jobs must be >= 1, got " + std::to_string(jobs));
  std::vector<DimOutcome> outcomes(dims.size());
  std::vector<std::exception_ptr> failures(dims.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < dims.size(); k = next++) {
      try {
        outcomes[k] = sweep_dimension(factory, scheme, dims[k], point_counts, eps_target, config);
      } catch (...) {
        failures[k] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(jobs, static_cast<int>(dims.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : failures) {
    if (e) std::rethrow_exception(e);
  }

  SweepResult result;
  std::vector<double> fit_d;
  std::vector<double> fit_p;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const int d = dims[k];
    result.rows.insert(result.rows.end(), outcomes[k].rows.begin(), outcomes[k].rows.end());
    result.dims.push_back(d);
    result.p_star.push_back(outcomes[k].found);
    if (outcomes[k].found == 0) {
      result.censored_dims.push_back(d);
    } else {
      fit_d.push_back(d);
      fit_p.push_back(outcomes[k].found);
    }
  }
  try {
    result.fit = fit_loglog(fit_d, fit_p, 2);
  } catch (const FitRefused& e) {
    result.fit_refusal = e.what();
  }
  return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "d,P,eps_mean,eps_std,seed,wall_s,censored\n";
  out.precision(17);
  for (const SweepRow& r : result.rows) {
    out << r.d << ',' << r.points << ',' << r.eps_mean << ',' << r.eps_std << ',' << r.seed << ',' << r.wall_s << ','
        << (r.censored ? 1 : 0) << '\n';
  }
}

WallTimeResult wall_time_scaling(const std::vector<ProblemFactory>& factories,
                                 const std::vector<std::string>& names, const std::vector<int>& dims,
                                 const bsde::TrainConfig& config) {
  if (factories.size() != names.size()) throw ConfigError("one name per problem factory is required");
  WallTimeResult result;
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t k = 0; k < factories.size(); ++k) {
    for (int d : dims) {
      const problems::PdeProblem problem = factories[k](d);
      bsde::TrainConfig c = config;
      c.horizon = problem.horizon;
      if (c.sampler == bsde::Sampler::kFixedPoint) c.sampler = bsde::Sampler::kPointSet;
      const bsde::TrainResult r = bsde::train(problem, sde::Scheme::kEm, c);
      result.rows.push_back({names[k], d, r.report.wall_s});
      x.push_back(d);
      y.push_back(r.report.wall_s);
    }
  }
  std::vector<double> distinct = x;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  try {
    if (distinct.size() < 2) throw FitRefused("wall-time fit needs at least two distinct dimensions");
    result.fit = fit_loglog(x, y, 2);
  } catch (const FitRefused& e) {
    result.fit_refusal = e.what();
  }
  return result;
}

}  // namespace kolmo::eval
