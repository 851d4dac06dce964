#include "kolmo/sde/path_batch.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "kolmo/util/errors.hpp"
#include "kolmo/sde/random.hpp"

namespace kolmo::sde {

std::vector<Matrix> sample_increments(int batch, int dim, const TimeGrid& grid, std::uint64_t seed,
                                      std::uint64_t stream) {
  if (batch < 1 || dim < 1) throw ContractError("sample_increments needs batch >= 1 and dim >= 1");
  if (!(grid.tau() > 0.0)) throw InvalidGrid("time step must be positive");
  const int slots = grid.steps() + 1;
  const double sd = std::sqrt(grid.tau());
  std::vector<Matrix> out(slots, Matrix(batch, dim));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int p = 0; p < batch; ++p) {
    std::mt19937_64 rng = substream(seed, stream, static_cast<std::uint64_t>(p));
    for (int n = 0; n < slots; ++n) {
      for (int i = 0; i < dim; ++i) out[n](p, i) = sd * normal(rng);
    }
  }
  return out;
}

PathBatch simulate_with_increments(const Dynamics& dyn, Scheme scheme, const Matrix& x0, const TimeGrid& grid,
                                   std::vector<Matrix> increments) {
  if (x0.cols() != dyn.dim) {
    throw ShapeError("initial points have " + std::to_string(x0.cols()) + " columns, expected " +
                     std::to_string(dyn.dim));
  }
  const int n_steps = grid.steps();
  if (static_cast<int>(increments.size()) != n_steps + 1) {
    throw ContractError("increment array must carry N + 1 slots");
  }
  require_scheme_support(dyn, scheme);
  const int batch = static_cast<int>(x0.rows());
  PathBatch out;
  out.scheme = scheme;
  out.grid = grid;
  out.states.assign(n_steps + 1, Matrix(batch, dyn.dim));
  out.states[0] = x0;
  const double tau = grid.tau();
  for (int p = 0; p < batch; ++p) {
    Vector y = x0.row(p).transpose();
    for (int n = 0; n < n_steps; ++n) {
      const double t = grid.time(n);
      const Vector dw = increments[n].row(p).transpose();
      try {
        switch (scheme) {
          case Scheme::kEm:
            y = em_step(dyn, y, t, tau, dw, n);
            break;
          case Scheme::kMilstein:
            y = milstein_step(dyn, y, t, tau, dw, n);
            break;
          case Scheme::kLm:
            y = lm_step(dyn, y, t, tau, dw, increments[n + 1].row(p).transpose(), n);
            break;
        }
      } catch (const BlowUpError& e) {
        throw BlowUpError("path " + std::to_string(p) + ": " + e.what(), p, e.step());
      }
      out.states[n + 1].row(p) = y.transpose();
    }
  }
  out.increments = std::move(increments);
  return out;
}

PathBatch simulate_batch(const Dynamics& dyn, Scheme scheme, const Matrix& x0, const TimeGrid& grid,
                         std::uint64_t seed, std::uint64_t stream) {
  return simulate_with_increments(dyn, scheme, x0, grid,
                                  sample_increments(static_cast<int>(x0.rows()), dyn.dim, grid, seed, stream));
}

void write_path_csv(const PathBatch& batch, std::ostream& out) {
  const int d = batch.dim();
  out << "path,n,t";
  for (int i = 0; i < d; ++i) out << ",Y_" << i;
  for (int i = 0; i < d; ++i) out << ",dW_" << i;
  out << '\n';
  out.precision(17);
  for (int p = 0; p < batch.batch(); ++p) {
    for (int n = 0; n <= batch.steps(); ++n) {
      out << p << ',' << n << ',' << batch.grid.time(n);
      for (int i = 0; i < d; ++i) out << ',' << batch.states[n](p, i);
      for (int i = 0; i < d; ++i) out << ',' << batch.increments[n](p, i);
      out << '\n';
    }
  }
}

}  // namespace kolmo::sde
