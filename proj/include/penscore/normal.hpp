#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace penscore {

// Standard normal CDF. Evaluated through erfc so that the lower tail keeps full
// relative precision far below 1e-300.
template <typename Scalar>
Scalar normal_cdf(Scalar x) {
  return Scalar(0.5) * std::erfc(-x / std::numbers::sqrt2_v<Scalar>);
}

// Upper tail 1 - Phi(x).
template <typename Scalar>
Scalar normal_sf(Scalar x) {
  return Scalar(0.5) * std::erfc(x / std::numbers::sqrt2_v<Scalar>);
}

template <typename Scalar>
Scalar normal_pdf(Scalar x) {
  return std::exp(Scalar(-0.5) * x * x) /
         std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
}

// Inverse of normal_cdf on (0, 1); returns -inf / +inf at the endpoints.
template <typename Scalar>
Scalar normal_quantile(Scalar p) {
  if (p <= Scalar(0)) return -std::numeric_limits<Scalar>::infinity();
  if (p >= Scalar(1)) return std::numeric_limits<Scalar>::infinity();
  return -std::numbers::sqrt2_v<Scalar> * boost::math::erfc_inv(Scalar(2) * p);
}

// Two-sided p-value 2 * Phi(-|t| / sqrt(variance)).
template <typename Scalar>
Scalar two_sided_p(Scalar t, Scalar variance) {
  return std::erfc(std::abs(t) / std::sqrt(Scalar(2) * variance));
}

}  // namespace penscore
