#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "kolmo/sde/steppers.hpp"
#include "kolmo/sde/time_grid.hpp"

namespace kolmo::sde {

/// Discretized trajectories stored time-major: states[n] and increments[n] are
/// (batch x d) with one row per path. increments[n] = W(t_{n+1}) - W(t_n) and
/// always has N + 1 slots; the last one is only consumed by the LM scheme.
struct PathBatch {
  Scheme scheme = Scheme::kEm;
  TimeGrid grid{1.0, 1};
  std::vector<Matrix> states;
  std::vector<Matrix> increments;

  int batch() const { return states.empty() ? 0 : static_cast<int>(states.front().rows()); }
  int dim() const { return states.empty() ? 0 : static_cast<int>(states.front().cols()); }
  int steps() const { return grid.steps(); }
};

/// N + 1 slots of i.i.d. N(0, tau) draws. Path p uses substream (seed, stream, p),
/// so a path's noise does not depend on the batch size.
std::vector<Matrix> sample_increments(int batch, int dim, const TimeGrid& grid, std::uint64_t seed,
                                      std::uint64_t stream);

/// Steps every row of `x0` through the grid with the given increments.
/// BlowUpError from a stepper is rethrown with the path index filled in.
PathBatch simulate_with_increments(const Dynamics& dyn, Scheme scheme, const Matrix& x0, const TimeGrid& grid,
                                   std::vector<Matrix> increments);

PathBatch simulate_batch(const Dynamics& dyn, Scheme scheme, const Matrix& x0, const TimeGrid& grid,
                         std::uint64_t seed, std::uint64_t stream);

/// Header `path,n,t,Y_0..Y_{d-1},dW_0..dW_{d-1}`, one line per (path, n).
void write_path_csv(const PathBatch& batch, std::ostream& out);

}  // namespace kolmo::sde
