#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "penscore/data_model.hpp"
#include "penscore/penalized_solver.hpp"

namespace penscore {

enum class Sigma2Method { MLRResidual, RefittedCV, Fixed };

std::string to_string(Sigma2Method method);

struct Sigma2Estimate {
  double value = 0.0;
  Sigma2Method method = Sigma2Method::MLRResidual;
  Eigen::Index df_used = 0;
};

// ||y - P_X y||^2 / (n - d - 1). Throws Underdetermined (d >= n - 1),
// RankDeficient, or DegenerateZeroVariance.
Sigma2Estimate estimate_sigma2_mlr(const Dataset& dataset);

struct RcvOptions {
  int folds = 10;
  int n_lambda = 50;
  double lambda_min_ratio = 1e-2;
  SolverOptions solver;
};

// Refitted cross-validation: split rows in half at random, select a lasso
// support on each half (lambda by k-fold CV), refit OLS on the other half with
// that support, and average the two residual variances.
Sigma2Estimate estimate_sigma2_rcv(const Dataset& dataset, int lambda_cv_folds,
                                   std::uint64_t rng_seed, const RcvOptions& options = {});

// One refitted-CV estimate for a fixed partition; the result is symmetric in
// (first, second). df_used reports the smaller of the two refit df.
Sigma2Estimate rcv_from_partition(const Dataset& dataset, const std::vector<Eigen::Index>& first,
                                  const std::vector<Eigen::Index>& second,
                                  const RcvOptions& options);

// Residual variance of the least-squares refit of y on X[:, support] with an
// intercept, divided by m - rank - 1. Throws SelectedSetTooLarge when
// |support| >= m - 1.
double refit_residual_variance(const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::VectorXd>& y,
                               const std::vector<Eigen::Index>& support, Eigen::Index& df);

// Lambda minimizing k-fold CV prediction error of the lasso on (X, y); rows
// are assigned to folds by position modulo k. X and y need not be centered.
double cv_lasso_lambda(const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const Eigen::Ref<const Eigen::VectorXd>& y, const RcvOptions& options);

}  // namespace penscore
