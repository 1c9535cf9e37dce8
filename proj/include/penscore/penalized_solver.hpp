#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace penscore {

template <typename Scalar>
Scalar soft_threshold(Scalar z, Scalar lambda) {
  const Scalar mag = std::abs(z) - lambda;
  if (mag <= Scalar(0)) return Scalar(0);
  return z > Scalar(0) ? mag : -mag;
}

// Coordinate-descent controls. Convergence requires both the per-sweep
// coefficient change bound and the KKT residual bound.
struct SolverOptions {
  double change_tol = 1e-9;
  double kkt_tol = 1e-7;
  long max_sweeps = 100000;
  bool record_objective = false;
  // Re-solve the stationarity equations on the final active set.
  bool polish = true;
};

// Solution of  ||y - Z b||^2 / (2n) + lambda * [mix ||b||_1 + (1 - mix) ||b||_2^2 / 2].
// Lasso fits have mix == 1. Inactive coefficients are literal zeros.
struct LassoFit {
  double lambda = 0.0;
  double mix = 1.0;
  Eigen::VectorXd coef;
  std::vector<Eigen::Index> active;
  std::vector<int> signs;
  Eigen::VectorXd fitted;
  long iterations = 0;
  bool converged = false;
  double kkt_violation = 0.0;
  std::vector<double> objective_trace;  // per sweep, only when requested
};

struct KktReport {
  bool ok = false;
  double max_violation = 0.0;
  Eigen::Index worst = -1;
};

// ||Z'y / n||_inf: smallest lambda with an all-zero lasso solution.
double lambda_max(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                  const Eigen::Ref<const Eigen::VectorXd>& y);

double penalized_objective(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                           const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& coef, double lambda,
                           double mix = 1.0);

LassoFit fit_lasso(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                   const Eigen::Ref<const Eigen::VectorXd>& y, double lambda,
                   const Eigen::VectorXd& warm = Eigen::VectorXd(),
                   const SolverOptions& options = {});

LassoFit fit_elastic_net(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                         const Eigen::Ref<const Eigen::VectorXd>& y, double lambda, double mix,
                         const Eigen::VectorXd& warm = Eigen::VectorXd(),
                         const SolverOptions& options = {});

// Warm-started fits over a strictly decreasing grid.
std::vector<LassoFit> fit_lasso_path(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                                     const Eigen::Ref<const Eigen::VectorXd>& y,
                                     const std::vector<double>& lambdas,
                                     const SolverOptions& options = {});

// Stationarity check of an (elastic-net or lasso) fit; the penalty is taken
// from fit.lambda and fit.mix.
KktReport check_kkt(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                    const Eigen::Ref<const Eigen::VectorXd>& y, const LassoFit& fit,
                    double tol);

// Applies the ridge smoother H = Z (lambda I + Z'Z/n)^{-1} Z' / n and its
// complement I - H = (I + Z Z' / (n lambda))^{-1}. Uses the p x p system when
// p <= n and the n x n dual system otherwise.
class RidgeSmoother {
 public:
  RidgeSmoother(const Eigen::Ref<const Eigen::MatrixXd>& Z, double lambda);

  Eigen::VectorXd fitted(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  Eigen::VectorXd residual(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  Eigen::VectorXd coefficients(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  double trace() const { return trace_; }
  bool dual() const { return dual_; }

 private:
  Eigen::MatrixXd Z_;
  double lambda_;
  bool dual_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double trace_ = 0.0;
};

struct RidgeFit {
  double lambda = 0.0;
  Eigen::VectorXd coef;
  Eigen::VectorXd fitted;
  double df = 0.0;  // trace of the smoother
};

RidgeFit fit_ridge(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                   const Eigen::Ref<const Eigen::VectorXd>& y, double lambda);

}  // namespace penscore
