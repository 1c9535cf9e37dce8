#pragma once

#include <Eigen/Dense>
#include <vector>

#include "penscore/score_test.hpp"

namespace penscore {

// Two-variable design y = alpha x + beta z + eps with x'x/n = z'z/n = 1,
// x'z/n = rho and eps ~ N(0, I). (alpha, beta) are chosen so the null
// a_lambda = 0 holds and Pr(z'y/n >= lambda) = gamma.
struct ThresholdScenario {
  double gamma = 0.0;
  double lambda = 0.0;
  double rho = 0.0;
  Eigen::Index n = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double b_lambda = 0.0;  // population soft-threshold of E[z'y/n]
  double a_lambda = 0.0;  // alpha + rho (beta - b_lambda), zero by construction

  double mean_w() const { return rho * alpha + beta; }  // E[z'y/n]
};

ThresholdScenario scenario_params(double gamma, double lambda, double rho, Eigen::Index n);

struct ErrorCurvePoint {
  double gamma = 0.0;
  double nominal_level = 0.0;
  double observed_level = 0.0;
  double relative_error = 0.0;
  VarianceMode variance_mode = VarianceMode::Asymptotic;
  double quadrature_error = 0.0;
};

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double truncation_sd = 10.0;
  unsigned max_depth = 20;
};

// Law of T_lambda conditional on w = z'y/n, and the variance estimate the
// test would use at that w.
struct ConditionalLaw {
  double mean = 0.0;
  double variance = 0.0;
  double estimate_variance = 0.0;
};

ConditionalLaw conditional_statistic_law(const ThresholdScenario& s, double w, VarianceMode mode);

// Exact Pr(|T| / sqrt(vhat) > z_{1 - level/2}) under the scenario, sigma^2 = 1.
ErrorCurvePoint exact_type1_error(const ThresholdScenario& scenario, double nominal_level,
                                  VarianceMode mode, const QuadratureOptions& options = {});

std::vector<ErrorCurvePoint> relative_error_curve(const std::vector<double>& gammas,
                                                  double lambda, double rho, Eigen::Index n,
                                                  const std::vector<double>& levels,
                                                  const std::vector<VarianceMode>& modes,
                                                  const QuadratureOptions& options = {});

}  // namespace penscore
