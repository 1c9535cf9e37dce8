#include "penscore/threshold_exact.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "penscore/errors.hpp"
#include "penscore/normal.hpp"
#include "penscore/penalized_solver.hpp"

namespace penscore {

ThresholdScenario scenario_params(double gamma, double lambda, double rho, Eigen::Index n) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  if (!(std::abs(rho) < 1.0)) throw InvalidArgument("rho must lie in (-1, 1)");
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (n < 2) throw InvalidArgument("n must be at least 2");

  const double rn = std::sqrt(static_cast<double>(n));
  const double q = normal_quantile(gamma) / rn;
  const double one_m_r2 = 1.0 - rho * rho;
  const double lower_edge = normal_cdf(-2.0 * rn * lambda);

  ThresholdScenario s;
  s.gamma = gamma;
  s.lambda = lambda;
  s.rho = rho;
  s.n = n;
  if (gamma > 0.5) s.alpha = -rho * lambda / one_m_r2;  // E w > lambda
  else if (gamma >= lower_edge) s.alpha = -rho * (q + lambda) / one_m_r2;  // |E w| <= lambda
  else s.alpha = rho * lambda / one_m_r2;  // E w < -lambda
  s.beta = q + lambda - rho * s.alpha;
  s.b_lambda = soft_threshold(s.mean_w(), lambda);
  s.a_lambda = s.alpha + rho * (s.beta - s.b_lambda);
  return s;
}

// With y = alpha x + beta z + eps and w = z'y/n = mu_w + z'eps/n:
//   w >= lambda:   T = sqrt(n)[(1 - rho^2) alpha + rho lambda] + u
//   |w| < lambda:  T = sqrt(n)(alpha + rho beta) + x'eps/sqrt(n)
//   w <= -lambda:  T = sqrt(n)[(1 - rho^2) alpha - rho lambda] + u
// where u = (x - rho z)'eps/sqrt(n) ~ N(0, 1 - rho^2) is independent of w
// because (x - rho z)'z = 0. On the middle branch split
//   x'eps/sqrt(n) = rho z'eps/sqrt(n) + u = rho sqrt(n)(w - mu_w) + u,
// so T | w is normal with mean sqrt(n)(alpha + rho beta) + rho sqrt(n)(w - mu_w)
// and variance 1 - rho^2 on every branch.
ConditionalLaw conditional_statistic_law(const ThresholdScenario& s, double w, VarianceMode mode) {
  const double rn = std::sqrt(static_cast<double>(s.n));
  const double one_m_r2 = 1.0 - s.rho * s.rho;
  ConditionalLaw law;
  law.variance = one_m_r2;
  const bool outer = std::abs(w) >= s.lambda;
  if (w >= s.lambda) law.mean = rn * (one_m_r2 * s.alpha + s.rho * s.lambda);
  else if (w <= -s.lambda) law.mean = rn * (one_m_r2 * s.alpha - s.rho * s.lambda);
  else law.mean = rn * (s.alpha + s.rho * s.beta) + s.rho * rn * (w - s.mean_w());
  if (mode == VarianceMode::Asymptotic) law.estimate_variance = outer ? one_m_r2 : 1.0;
  else if (mode == VarianceMode::Conservative) law.estimate_variance = 1.0;
  else throw InvalidArgument("thresholding analysis supports asymptotic or conservative variance");
  return law;
}

namespace {

// Pr(|N(mean, var)| > c).
double two_sided_tail(double mean, double var, double c) {
  const double sd = std::sqrt(var);
  return normal_cdf((mean - c) / sd) + normal_cdf((-mean - c) / sd);
}

}  // namespace

ErrorCurvePoint exact_type1_error(const ThresholdScenario& s, double nominal_level,
                                  VarianceMode mode, const QuadratureOptions& options) {
  if (!(nominal_level > 0.0 && nominal_level < 0.5))
    throw InvalidArgument("nominal level must lie in (0, 0.5)");
  const double rn = std::sqrt(static_cast<double>(s.n));
  const double crit = normal_quantile(1.0 - nominal_level / 2.0);
  const double mu = s.mean_w();
  const double sd_w = 1.0 / rn;

  auto rejection_given_w = [&](double w) {
    const ConditionalLaw law = conditional_statistic_law(s, w, mode);
    return two_sided_tail(law.mean, law.variance, crit * std::sqrt(law.estimate_variance));
  };

  // outer branches: conditional rejection probability does not depend on w
  const double p_upper = normal_sf((s.lambda - mu) / sd_w);
  const double p_lower = normal_cdf((-s.lambda - mu) / sd_w);
  double observed = p_upper * rejection_given_w(s.lambda) + p_lower * rejection_given_w(-s.lambda);

  // middle branch, truncated to mu +/- truncation_sd * sd_w
  const double a = std::max(-s.lambda, mu - options.truncation_sd * sd_w);
  const double b = std::min(s.lambda, mu + options.truncation_sd * sd_w);
  double err = 0.0;
  if (a < b) {
    auto integrand = [&](double w) {
      return normal_pdf((w - mu) / sd_w) / sd_w * rejection_given_w(w);
    };
    double l1 = 0.0;
    const double mid = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, a, b, options.max_depth, 1e-14, &err, &l1);
    if (!(err <= options.abs_tol) || !std::isfinite(mid))
      throw QuadratureNotConverged("middle-branch integral error estimate " + std::to_string(err));
    observed += mid;
  }

  ErrorCurvePoint pt;
  pt.gamma = s.gamma;
  pt.nominal_level = nominal_level;
  pt.observed_level = observed;
  pt.relative_error = observed / nominal_level;
  pt.variance_mode = mode;
  pt.quadrature_error = err;
  return pt;
}

std::vector<ErrorCurvePoint> relative_error_curve(const std::vector<double>& gammas,
                                                  double lambda, double rho, Eigen::Index n,
                                                  const std::vector<double>& levels,
                                                  const std::vector<VarianceMode>& modes,
                                                  const QuadratureOptions& options) {
  std::vector<ErrorCurvePoint> out;
  out.reserve(gammas.size() * levels.size() * modes.size());
  for (double g : gammas) {
    const ThresholdScenario s = scenario_params(g, lambda, rho, n);
    for (double level : levels)
      for (VarianceMode m : modes) out.push_back(exact_type1_error(s, level, m, options));
  }
  return out;
}

}  // namespace penscore
