#pragma once

#include <cstdint>

#include "kolmo/eval/metrics.hpp"

namespace kolmo::eval {

/// -(1/lambda) ln E[exp(-lambda phi(x + sqrt(2) W_{T-t}))] with
/// phi(x) = ln((1 + |x|^2) / 2), evaluated in log-sum-exp form. The standard
/// error comes from the delta method on the logarithm.
McEstimate hjb_reference(const Vector& x, double lambda, double horizon, double t, long n_mc, std::uint64_t seed);

}  // namespace kolmo::eval
