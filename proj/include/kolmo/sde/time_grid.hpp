#pragma once

namespace kolmo::sde {

/// Equidistant grid 0 = t_0 < t_1 < ... < t_N = T with step tau = T / N.
class TimeGrid {
 public:
  /// Throws InvalidGrid unless horizon > 0 and steps >= 1.
  TimeGrid(double horizon, int steps);

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  double tau() const { return tau_; }
  double time(int n) const { return n * tau_; }

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_;
  int steps_;
  double tau_;
};

}  // namespace kolmo::sde
