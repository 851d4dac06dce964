#include "kolmo/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "kolmo/sde/random.hpp"
#include "kolmo/util/errors.hpp"

namespace kolmo::eval {
namespace {

void finish(ErrorSummary& s) {
  double sum = 0.0;
  for (double r : s.residuals) sum += r;
  s.probes = static_cast<int>(s.residuals.size());
  s.mean = s.probes > 0 ? sum / s.probes : 0.0;
  if (s.rejected > 0) {
    s.warnings.push_back(std::to_string(s.rejected) + " probe(s) rejected: exact value is zero");
  }
}

struct Line {
  double slope;
  double intercept;
};

Line ols(const std::vector<double>& lx, const std::vector<double>& ly, int skip) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    if (static_cast<int>(i) == skip) continue;
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
    n += 1;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw FitRefused("log-log fit needs at least two distinct abscissae");
  const double slope = (n * sxy - sx * sy) / denom;
  return {slope, (sy - slope * sx) / n};
}

}  // namespace

ErrorSummary avg_relative_error(const PointFn& predict, const PointFn& exact, const Matrix& probes,
                                double noise_floor) {
  ErrorSummary s;
  s.noise_floor = noise_floor;
  for (Eigen::Index m = 0; m < probes.rows(); ++m) {
    const Vector x = probes.row(m).transpose();
    const double g = exact(x);
    if (g == 0.0) {
      ++s.rejected;
      continue;
    }
    s.residuals.push_back(std::abs((g - predict(x)) / g));
  }
  finish(s);
  return s;
}

ErrorSummary avg_relative_error(const Vector& predicted, const Vector& exact, double noise_floor) {
  if (predicted.size() != exact.size()) throw ShapeError("prediction and reference counts differ");
  ErrorSummary s;
  s.noise_floor = noise_floor;
  for (Eigen::Index m = 0; m < exact.size(); ++m) {
    if (exact(m) == 0.0) {
      ++s.rejected;
      continue;
    }
    s.residuals.push_back(std::abs((exact(m) - predicted(m)) / exact(m)));
  }
  finish(s);
  return s;
}

Matrix uniform_probes(int m, int d, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng = sde::substream(seed, sde::stream_key(sde::StreamTag::kProbes), 0);
  std::uniform_real_distribution<double> box(lo, hi);
  Matrix x(m, d);
  for (int p = 0; p < m; ++p) {
    for (int i = 0; i < d; ++i) x(p, i) = box(rng);
  }
  return x;
}

ScalingFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, int min_points) {
  if (x.size() != y.size()) throw ShapeError("fit needs equally many abscissae and ordinates");
  ScalingFit fit;
  fit.x = x;
  fit.y = y;
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw FitRefused("log-log fit needs positive finite data (point " + std::to_string(i) + ")");
    }
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  if (static_cast<int>(lx.size()) < std::max(min_points, 2)) {
    throw FitRefused("log-log fit needs at least " + std::to_string(std::max(min_points, 2)) + " points, got " +
                     std::to_string(lx.size()));
  }
  const Line line = ols(lx, ly, -1);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.points_used = static_cast<int>(lx.size());
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (line.intercept + line.slope * lx[i]);
    rss += r * r;
  }
  fit.resid = std::sqrt(rss);
  if (lx.size() > 2) {
    for (std::size_t k = 0; k < lx.size(); ++k) {
      fit.slope_spread = std::max(fit.slope_spread, std::abs(ols(lx, ly, static_cast<int>(k)).slope - fit.slope));
    }
  }
  return fit;
}

void write_fit_csv(const ScalingFit& fit, std::ostream& out) {
  out << "slope,intercept,resid,points_used\n";
  out.precision(17);
  out << fit.slope << ',' << fit.intercept << ',' << fit.resid << ',' << fit.points_used << '\n';
}

}  // namespace kolmo::eval
