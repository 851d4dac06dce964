#include "kolmo/eval/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "kolmo/sde/random.hpp"
#include "kolmo/util/errors.hpp"

namespace kolmo::eval {

McEstimate hjb_reference(const Vector& x, double lambda, double horizon, double t, long n_mc, std::uint64_t seed) {
  if (!(lambda > 0.0)) throw ContractError("hjb_reference needs lambda > 0");
  if (n_mc < 1) throw ContractError("hjb_reference needs n_mc >= 1");
  auto phi = [](double squared_norm) { return std::log((1.0 + squared_norm) / 2.0); };
  McEstimate est;
  est.samples = n_mc;
  const double remaining = horizon - t;
  if (remaining <= 0.0) {
    est.value = phi(x.squaredNorm());
    return est;
  }
  const double sd = std::sqrt(2.0 * remaining);
  const int d = static_cast<int>(x.size());
  std::mt19937_64 rng = sde::substream(seed, sde::stream_key(sde::StreamTag::kReference), 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> a(n_mc);
  for (long k = 0; k < n_mc; ++k) {
    double sq = 0.0;
    for (int i = 0; i < d; ++i) {
      const double y = x(i) + sd * normal(rng);
      sq += y * y;
    }
    a[k] = -lambda * phi(sq);
  }
  const double m = *std::max_element(a.begin(), a.end());
  double sum = 0.0;
  for (double& v : a) {
    v = std::exp(v - m);
    sum += v;
  }
  const double n = static_cast<double>(n_mc);
  const double mean = sum / n;
  est.value = -(m + std::log(mean)) / lambda;
  if (n_mc > 1) {
    double ss = 0.0;
    for (double v : a) ss += (v - mean) * (v - mean);
    est.std_error = std::sqrt(ss / (n - 1.0) / n) / (mean * lambda);
  }
  return est;
}

}  // namespace kolmo::eval
