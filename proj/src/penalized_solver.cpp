#include "penscore/penalized_solver.hpp"

#include <algorithm>
#include <string>

#include "penscore/errors.hpp"

namespace penscore {

double lambda_max(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                  const Eigen::Ref<const Eigen::VectorXd>& y) {
  // same arithmetic as the first coordinate update from zero
  double m = 0.0;
  for (Eigen::Index j = 0; j < Z.cols(); ++j)
    m = std::max(m, std::abs(Z.col(j).dot(y) / static_cast<double>(Z.rows())));
  return m;
}

double penalized_objective(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                           const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& coef, double lambda,
                           double mix) {
  const double n = static_cast<double>(Z.rows());
  const double loss = (coef.size() ? (y - Z * coef).squaredNorm() : y.squaredNorm()) / (2.0 * n);
  return loss + lambda * (mix * coef.lpNorm<1>() + 0.5 * (1.0 - mix) * coef.squaredNorm());
}

namespace {

void validate_problem(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                      const Eigen::Ref<const Eigen::VectorXd>& y, double lambda, double mix) {
  if (Z.rows() != y.size()) throw InvalidArgument("design rows and response length differ");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be >= 0");
  if (!(mix > 0.0 && mix <= 1.0)) throw InvalidArgument("mix must lie in (0, 1]");
}

void finalize_support(LassoFit& fit) {
  fit.active.clear();
  fit.signs.clear();
  for (Eigen::Index j = 0; j < fit.coef.size(); ++j) {
    if (fit.coef(j) != 0.0) {
      fit.active.push_back(j);
      fit.signs.push_back(fit.coef(j) > 0.0 ? 1 : -1);
    }
  }
}

// Solves the stationarity equations on the current support with the signs
// held fixed. Accepted only if signs survive and the KKT residual does not grow.
void polish_active_set(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                       const Eigen::Ref<const Eigen::VectorXd>& y, LassoFit& fit,
                       Eigen::VectorXd& resid, double kkt_tol) {
  if (fit.active.empty()) return;
  const double n = static_cast<double>(Z.rows());
  const auto& A = fit.active;
  const Eigen::MatrixXd ZA = Z(Eigen::all, A);
  const auto q = static_cast<Eigen::Index>(A.size());
  Eigen::MatrixXd G = ZA.transpose() * ZA / n;
  G.diagonal().array() += fit.lambda * (1.0 - fit.mix);
  Eigen::VectorXd tau(q);
  for (Eigen::Index k = 0; k < q; ++k) tau(k) = fit.signs[static_cast<std::size_t>(k)];
  const Eigen::VectorXd rhs = ZA.transpose() * y / n - fit.lambda * fit.mix * tau;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return;
  const Eigen::VectorXd bA = ldlt.solve(rhs);
  if (!bA.allFinite()) return;
  for (Eigen::Index k = 0; k < q; ++k)
    if (bA(k) * tau(k) <= 0.0) return;

  LassoFit trial = fit;
  trial.coef(A) = bA;
  const KktReport before = check_kkt(Z, y, fit, kkt_tol);
  const KktReport after = check_kkt(Z, y, trial, kkt_tol);
  if (after.max_violation <= std::max(before.max_violation, kkt_tol)) {
    fit.coef = trial.coef;
    resid = y - ZA * bA;
  }
}

// Exact minimizer on the face of the current support and signs. Taken when it
// keeps every sign and does not raise the objective.
bool face_solve(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                const Eigen::Ref<const Eigen::VectorXd>& y, LassoFit& fit,
                Eigen::VectorXd& resid) {
  finalize_support(fit);
  if (fit.active.empty()) return false;
  const double n = static_cast<double>(Z.rows());
  const auto& A = fit.active;
  const Eigen::MatrixXd ZA = Z(Eigen::all, A);
  const auto q = static_cast<Eigen::Index>(A.size());
  Eigen::MatrixXd G = ZA.transpose() * ZA / n;
  G.diagonal().array() += fit.lambda * (1.0 - fit.mix);
  Eigen::VectorXd tau(q);
  for (Eigen::Index k = 0; k < q; ++k) tau(k) = fit.signs[static_cast<std::size_t>(k)];
  // correction from the current point; minimum-norm when G is singular, which
  // keeps the null-space component of the current coefficients
  const Eigen::VectorXd current = fit.coef(A);
  const Eigen::VectorXd rhs = ZA.transpose() * resid / n - fit.lambda * fit.mix * tau -
                              fit.lambda * (1.0 - fit.mix) * current;
  Eigen::VectorXd step;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  const Eigen::VectorXd piv = ldlt.vectorD();
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
      piv.minCoeff() > 1e-10 * piv.cwiseAbs().maxCoeff()) {
    step = ldlt.solve(rhs);
  } else {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(G);
    cod.setThreshold(1e-10);
    step = cod.solve(rhs);
  }
  const Eigen::VectorXd bA = current + step;
  if (!bA.allFinite()) return false;
  for (Eigen::Index k = 0; k < q; ++k)
    if (bA(k) * tau(k) <= 0.0) return false;
  const Eigen::VectorXd r = y - ZA * bA;
  auto objective = [&](const Eigen::VectorXd& res, const Eigen::VectorXd& b) {
    return res.squaredNorm() / (2.0 * n) +
           fit.lambda * (fit.mix * b.lpNorm<1>() + 0.5 * (1.0 - fit.mix) * b.squaredNorm());
  };
  if (objective(r, bA) > objective(resid, fit.coef(A))) return false;
  fit.coef(A) = bA;
  resid = r;
  return true;
}

LassoFit coordinate_descent(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                            const Eigen::Ref<const Eigen::VectorXd>& y, double lambda, double mix,
                            const Eigen::VectorXd& warm, const SolverOptions& opt) {
  validate_problem(Z, y, lambda, mix);
  const Eigen::Index n = Z.rows();
  const Eigen::Index p = Z.cols();
  const double dn = static_cast<double>(n);
  const double l1 = lambda * mix;
  const double l2 = lambda * (1.0 - mix);

  LassoFit fit;
  fit.lambda = lambda;
  fit.mix = mix;
  fit.coef = Eigen::VectorXd::Zero(p);
  if (warm.size() == p) fit.coef = warm;
  else if (warm.size() != 0) throw InvalidArgument("warm start has wrong length");

  Eigen::VectorXd colsq(p);
  for (Eigen::Index j = 0; j < p; ++j) colsq(j) = Z.col(j).squaredNorm() / dn;

  Eigen::VectorXd resid = y;
  if (p > 0 && fit.coef.any()) resid.noalias() -= Z * fit.coef;

  auto update = [&](Eigen::Index j) {
    const double bj = fit.coef(j);
    double next = 0.0;
    if (colsq(j) > 0.0) {
      const double u = Z.col(j).dot(resid) / dn + colsq(j) * bj;
      next = soft_threshold(u, l1) / (colsq(j) + l2);
    }
    const double delta = next - bj;
    if (delta != 0.0) {
      resid.noalias() -= delta * Z.col(j);
      fit.coef(j) = next;
    }
    return std::abs(delta);
  };
  auto record = [&] {
    if (opt.record_objective)
      fit.objective_trace.push_back(resid.squaredNorm() / (2.0 * dn) +
                                    lambda * (mix * fit.coef.lpNorm<1>() +
                                              0.5 * (1.0 - mix) * fit.coef.squaredNorm()));
  };

  record();
  long sweeps = 0;
  std::vector<Eigen::Index> active;
  while (sweeps < opt.max_sweeps) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) max_change = std::max(max_change, update(j));
    ++sweeps;
    record();

    if (max_change <= opt.change_tol) {
      finalize_support(fit);
      const KktReport kkt = check_kkt(Z, y, fit, opt.kkt_tol);
      fit.kkt_violation = kkt.max_violation;
      if (kkt.ok) {
        fit.converged = true;
        break;
      }
    }


    // cycle over the current support until it settles
    active.clear();
    for (Eigen::Index j = 0; j < p; ++j)
      if (fit.coef(j) != 0.0) active.push_back(j);
    // a sign pattern that persists across inner sweeps is usually final, so
    // try its exact solution at inner sweeps 8, 16, 32, ...
    std::vector<int> signs(active.size()), prev(active.size(), 0);
    long inner = 0, next_try = 8;
    while (sweeps < opt.max_sweeps && !active.empty()) {
      double inner_change = 0.0;
      for (auto j : active) inner_change = std::max(inner_change, update(j));
      ++sweeps;
      ++inner;
      record();
      if (inner_change <= opt.change_tol) break;
      for (std::size_t k = 0; k < active.size(); ++k)
        signs[k] = (fit.coef(active[k]) > 0.0) - (fit.coef(active[k]) < 0.0);
      if (opt.polish && inner >= next_try) {
        next_try *= 2;
        if (signs == prev && face_solve(Z, y, fit, resid)) {
          record();
          break;
        }
      }
      prev = signs;
    }
  }

  finalize_support(fit);
  if (fit.converged && opt.polish) {
    polish_active_set(Z, y, fit, resid, opt.kkt_tol);
    finalize_support(fit);
  }
  fit.iterations = sweeps;
  fit.fitted = y - resid;
  const KktReport kkt = check_kkt(Z, y, fit, opt.kkt_tol);
  fit.kkt_violation = kkt.max_violation;
  fit.converged = fit.converged && kkt.ok;
  return fit;
}

}  // namespace

LassoFit fit_lasso(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                   const Eigen::Ref<const Eigen::VectorXd>& y, double lambda,
                   const Eigen::VectorXd& warm, const SolverOptions& options) {
  return coordinate_descent(Z, y, lambda, 1.0, warm, options);
}

LassoFit fit_elastic_net(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                         const Eigen::Ref<const Eigen::VectorXd>& y, double lambda, double mix,
                         const Eigen::VectorXd& warm, const SolverOptions& options) {
  return coordinate_descent(Z, y, lambda, mix, warm, options);
}

std::vector<LassoFit> fit_lasso_path(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                                     const Eigen::Ref<const Eigen::VectorXd>& y,
                                     const std::vector<double>& lambdas,
                                     const SolverOptions& options) {
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!(lambdas[k] >= 0.0)) throw InvalidArgument("lambda grid must be non-negative");
    if (k > 0 && !(lambdas[k] < lambdas[k - 1]))
      throw InvalidArgument("lambda grid must be strictly decreasing");
  }
  std::vector<LassoFit> path;
  path.reserve(lambdas.size());
  Eigen::VectorXd warm;
  for (double lam : lambdas) {
    path.push_back(fit_lasso(Z, y, lam, warm, options));
    warm = path.back().coef;
  }
  return path;
}

KktReport check_kkt(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                    const Eigen::Ref<const Eigen::VectorXd>& y, const LassoFit& fit,
                    double tol) {
  if (Z.cols() != fit.coef.size() || Z.rows() != y.size())
    throw InvalidArgument("check_kkt: dimension mismatch");
  KktReport report;
  report.ok = true;
  const double n = static_cast<double>(Z.rows());
  if (Z.cols() == 0) return report;
  const Eigen::VectorXd grad = Z.transpose() * (y - Z * fit.coef) / n;
  const double l1 = fit.lambda * fit.mix;
  const double l2 = fit.lambda * (1.0 - fit.mix);
  for (Eigen::Index j = 0; j < Z.cols(); ++j) {
    const double b = fit.coef(j);
    double v;
    if (b != 0.0) v = std::abs(grad(j) - l2 * b - l1 * (b > 0.0 ? 1.0 : -1.0));
    else v = std::max(0.0, std::abs(grad(j)) - l1);
    if (v > report.max_violation) {
      report.max_violation = v;
      report.worst = j;
    }
  }
  report.ok = report.max_violation <= tol;
  return report;
}

RidgeSmoother::RidgeSmoother(const Eigen::Ref<const Eigen::MatrixXd>& Z, double lambda)
    : Z_(Z), lambda_(lambda), dual_(Z.cols() > Z.rows()) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw InvalidArgument("ridge lambda must be positive");
  const Eigen::Index n = Z_.rows();
  const Eigen::Index p = Z_.cols();
  const double dn = static_cast<double>(n);
  if (p == 0) return;
  if (!dual_) {
    Eigen::MatrixXd A = Z_.transpose() * Z_ / dn;
    A.diagonal().array() += lambda_;
    llt_.compute(A);
    // trace(H) = trace(A^{-1} Z'Z/n) = p - lambda trace(A^{-1})
    const Eigen::MatrixXd inv = llt_.solve(Eigen::MatrixXd::Identity(p, p));
    trace_ = static_cast<double>(p) - lambda_ * inv.trace();
  } else {
    Eigen::MatrixXd B = Z_ * Z_.transpose() / (dn * lambda_);
    B.diagonal().array() += 1.0;
    llt_.compute(B);
    const Eigen::MatrixXd inv = llt_.solve(Eigen::MatrixXd::Identity(n, n));
    trace_ = dn - inv.trace();
  }
  if (llt_.info() != Eigen::Success) throw RankDeficient("ridge system is not positive definite");
}

Eigen::VectorXd RidgeSmoother::coefficients(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  const double dn = static_cast<double>(Z_.rows());
  if (Z_.cols() == 0) return Eigen::VectorXd();
  if (!dual_) return llt_.solve(Z_.transpose() * v / dn);
  return Z_.transpose() * llt_.solve(v) / (dn * lambda_);
}

Eigen::VectorXd RidgeSmoother::fitted(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (Z_.cols() == 0) return Eigen::VectorXd::Zero(v.size());
  if (!dual_) return Z_ * coefficients(v);
  return v - llt_.solve(v);
}

Eigen::VectorXd RidgeSmoother::residual(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (Z_.cols() == 0) return v;
  if (!dual_) return v - fitted(v);
  return llt_.solve(v);
}

RidgeFit fit_ridge(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                   const Eigen::Ref<const Eigen::VectorXd>& y, double lambda) {
  if (Z.rows() != y.size()) throw InvalidArgument("design rows and response length differ");
  RidgeSmoother smoother(Z, lambda);
  RidgeFit fit;
  fit.lambda = lambda;
  fit.coef = smoother.coefficients(y);
  fit.fitted = Z.cols() ? Eigen::VectorXd(Z * fit.coef) : Eigen::VectorXd::Zero(y.size());
  fit.df = smoother.trace();
  return fit;
}

}  // namespace penscore
