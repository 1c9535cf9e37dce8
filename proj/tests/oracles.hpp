#pragma once

// Test-only reference computations. Nothing here calls the coordinate-descent
// solver or the branch decomposition used by the thresholding analysis.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

inline Eigen::MatrixXd random_standardized(Eigen::Index n, Eigen::Index p, std::mt19937_64& rng,
                                           double corr = 0.0) {
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double common = N(rng);
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = std::sqrt(1 - corr) * N(rng) + std::sqrt(corr) * common;
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    X.col(j).array() -= X.col(j).mean();
    X.col(j) *= std::sqrt(static_cast<double>(n)) / X.col(j).norm();
  }
  return X;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = N(rng);
  return v;
}

// Exhaustive sign-pattern solution of
//   ||y - Z b||^2/(2n) + l1 ||b||_1 + l2 ||b||^2 / 2
// for small p: for each pattern in {-1,0,1}^p solve the equality-constrained
// quadratic on the nonzero coordinates, keep the KKT-feasible candidates and
// return the one with the smallest objective.
inline Eigen::VectorXd sign_pattern_solution(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                             double l1, double l2) {
  const Eigen::Index p = Z.cols();
  const double n = static_cast<double>(Z.rows());
  const Eigen::MatrixXd G = Z.transpose() * Z / n;
  const Eigen::VectorXd c = Z.transpose() * y / n;
  int patterns = 1;
  for (Eigen::Index j = 0; j < p; ++j) patterns *= 3;
  double best_obj = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best = Eigen::VectorXd::Zero(p);
  for (int code = 0; code < patterns; ++code) {
    std::vector<int> s(static_cast<std::size_t>(p));
    int c3 = code;
    for (Eigen::Index j = 0; j < p; ++j) {
      s[static_cast<std::size_t>(j)] = c3 % 3 - 1;
      c3 /= 3;
    }
    std::vector<Eigen::Index> A;
    for (Eigen::Index j = 0; j < p; ++j)
      if (s[static_cast<std::size_t>(j)] != 0) A.push_back(j);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    if (!A.empty()) {
      const auto q = static_cast<Eigen::Index>(A.size());
      Eigen::MatrixXd GA(q, q);
      Eigen::VectorXd rhs(q);
      for (Eigen::Index a = 0; a < q; ++a) {
        for (Eigen::Index bb = 0; bb < q; ++bb) GA(a, bb) = G(A[a], A[bb]);
        GA(a, a) += l2;
        rhs(a) = c(A[a]) - l1 * s[static_cast<std::size_t>(A[a])];
      }
      const Eigen::VectorXd bA = GA.fullPivLu().solve(rhs);
      bool consistent = true;
      for (Eigen::Index a = 0; a < q; ++a) {
        if (bA(a) * s[static_cast<std::size_t>(A[a])] <= 0) consistent = false;
        b(A[a]) = bA(a);
      }
      if (!consistent) continue;
    }
    const Eigen::VectorXd grad = c - G * b;
    bool feasible = true;
    for (Eigen::Index j = 0; j < p; ++j)
      if (s[static_cast<std::size_t>(j)] == 0 && std::abs(grad(j)) > l1 + 1e-12) feasible = false;
    if (!feasible) continue;
    const double obj = (y - Z * b).squaredNorm() / (2 * n) + l1 * b.lpNorm<1>() + 0.5 * l2 * b.squaredNorm();
    if (obj < best_obj) {
      best_obj = obj;
      best = b;
    }
  }
  return best;
}

// Fixed x, z of length n with x'x/n = z'z/n = 1 and x'z/n = rho exactly.
struct TwoVariableDesign {
  Eigen::VectorXd x, z;
};

inline TwoVariableDesign two_variable_design(Eigen::Index n, double rho, std::mt19937_64& rng) {
  const double dn = static_cast<double>(n);
  Eigen::VectorXd u = random_vector(n, rng), v = random_vector(n, rng);
  u.array() -= u.mean();
  v.array() -= v.mean();
  u *= std::sqrt(dn) / u.norm();
  v -= u * (u.dot(v) / dn);
  v *= std::sqrt(dn) / v.norm();
  return {u, rho * u + std::sqrt(1 - rho * rho) * v};
}

struct McEstimate {
  double rate = 0.0;
  double se = 0.0;
};

// Direct simulation of the two-step test: soft-threshold z'y/n, form T,
// compare |T|/sqrt(vhat) with the two-sided normal cutoff. Returns rejection
// rates for every (gamma, level, conservative?) combination, ordered as
// [gamma][level][mode] with mode 0 = asymptotic, 1 = conservative. The same
// error draws are reused for every gamma.
struct McScenario {
  double alpha, beta;
};

inline std::vector<McEstimate> monte_carlo_two_step(const TwoVariableDesign& design, double lambda,
                                                    const std::vector<McScenario>& scenarios,
                                                    const std::vector<double>& crits,
                                                    long draws, std::uint64_t seed) {
  const Eigen::Index n = design.x.size();
  const double dn = static_cast<double>(n);
  const double rho = design.x.dot(design.z) / dn;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  const std::size_t K = scenarios.size() * crits.size() * 2;
  std::vector<long> hits(K, 0);
  Eigen::VectorXd eps(n);
  for (long b = 0; b < draws; ++b) {
    for (Eigen::Index i = 0; i < n; ++i) eps(i) = N(rng);
    const double xe = design.x.dot(eps);
    const double ze = design.z.dot(eps);
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
      const auto& sc = scenarios[s];
      // inner products of y = alpha x + beta z + eps
      const double zy = sc.alpha * rho * dn + sc.beta * dn + ze;
      const double xy = sc.alpha * dn + sc.beta * rho * dn + xe;
      const double w = zy / dn;
      const double bhat = std::copysign(std::max(std::abs(w) - lambda, 0.0), w);
      const double T = (xy - bhat * rho * dn) / std::sqrt(dn);
      const double v_asym = bhat != 0.0 ? 1.0 - rho * rho : 1.0;
      for (std::size_t c = 0; c < crits.size(); ++c) {
        const std::size_t base = (s * crits.size() + c) * 2;
        if (std::abs(T) / std::sqrt(v_asym) > crits[c]) ++hits[base];
        if (std::abs(T) > crits[c]) ++hits[base + 1];
      }
    }
  }
  std::vector<McEstimate> out(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double p = static_cast<double>(hits[k]) / static_cast<double>(draws);
    out[k].rate = p;
    out[k].se = std::sqrt(std::max(p * (1 - p), 1e-300) / static_cast<double>(draws));
  }
  return out;
}

// Kolmogorov-Smirnov distance of a sample from N(0, 1).
inline double ks_distance_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double m = static_cast<double>(xs.size());
  double D = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = 0.5 * std::erfc(-xs[i] / std::sqrt(2.0));
    D = std::max({D, F - static_cast<double>(i) / m, static_cast<double>(i + 1) / m - F});
  }
  return D;
}

}  // namespace oracle
