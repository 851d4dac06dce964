#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kolmo::eval {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using PointFn = std::function<double(const Vector&)>;

/// Monte-Carlo value with its standard error.
struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

struct ErrorSummary {
  double mean = 0.0;  // <eps>
  int probes = 0;     // probes that entered the mean
  int rejected = 0;   // probes with a zero exact value
  std::vector<double> residuals;
  double noise_floor = 0.0;
  std::vector<std::string> warnings;
};

/// Mean of |(exact - predict) / exact| over the probe rows. Probes where the
/// exact value is zero are skipped and counted in `rejected`.
ErrorSummary avg_relative_error(const PointFn& predict, const PointFn& exact, const Matrix& probes,
                                double noise_floor = 0.0);
ErrorSummary avg_relative_error(const Vector& predicted, const Vector& exact, double noise_floor = 0.0);

/// M points uniform in [lo, hi]^d from substream (seed, probes).
Matrix uniform_probes(int m, int d, double lo, double hi, std::uint64_t seed);

/// Ordinary least squares of log(y) on log(x).
struct ScalingFit {
  std::vector<double> x;
  std::vector<double> y;
  double slope = 0.0;
  double intercept = 0.0;
  double resid = 0.0;  // Euclidean norm of the log-space residuals
  int points_used = 0;
  double slope_spread = 0.0;  // max |slope - slope without point k|
  std::vector<std::string> warnings;
};

/// Throws FitRefused with fewer than `min_points` points or non-positive data.
ScalingFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, int min_points = 2);

/// Header `slope,intercept,resid,points_used`.
void write_fit_csv(const ScalingFit& fit, std::ostream& out);

}  // namespace kolmo::eval
