#include "kolmo/sde/time_grid.hpp"

#include <cmath>
#include <string>

#include "kolmo/util/errors.hpp"

namespace kolmo::sde {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidGrid("time horizon must be positive and finite, got " + std::to_string(horizon));
  }
  if (steps < 1) throw InvalidGrid("number of time steps must be >= 1, got " + std::to_string(steps));
  tau_ = horizon / steps;
}

}  // namespace kolmo::sde
