#include "penscore/variance_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "penscore/errors.hpp"

namespace penscore {

std::string to_string(Sigma2Method method) {
  switch (method) {
    case Sigma2Method::MLRResidual: return "mlr";
    case Sigma2Method::RefittedCV: return "rcv";
    case Sigma2Method::Fixed: return "fixed";
  }
  return "unknown";
}

Sigma2Estimate estimate_sigma2_mlr(const Dataset& dataset) {
  const Eigen::Index n = dataset.n();
  const Eigen::Index d = dataset.d();
  if (d >= n - 1)
    throw Underdetermined("residual variance needs d < n - 1 (d = " + std::to_string(d) +
                          ", n = " + std::to_string(n) + ")");
  double rss = dataset.y.squaredNorm();
  if (d > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dataset.X);
    qr.setThreshold(1e-10);
    if (qr.rank() < d) throw RankDeficient("design matrix is not of full column rank");
    rss = (dataset.y - dataset.X * qr.solve(dataset.y)).squaredNorm();
  }
  if (!(rss > 1e-20 * dataset.y.squaredNorm()))
    throw DegenerateZeroVariance("response lies in the span of the design");
  Sigma2Estimate est;
  est.df_used = n - d - 1;
  est.value = rss / static_cast<double>(est.df_used);
  est.method = Sigma2Method::MLRResidual;
  return est;
}

namespace {

struct Centered {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::RowVectorXd x_mean;
  double y_mean = 0.0;
};

Centered center_rows(const Eigen::Ref<const Eigen::MatrixXd>& X,
                     const Eigen::Ref<const Eigen::VectorXd>& y) {
  Centered c;
  c.x_mean = X.colwise().mean();
  c.y_mean = y.mean();
  c.X = X.rowwise() - c.x_mean;
  c.y = y.array() - c.y_mean;
  return c;
}

std::vector<double> lambda_grid(double lmax, const RcvOptions& opt) {
  std::vector<double> grid;
  if (!(lmax > 0.0)) return {0.0};
  const int k = std::max(opt.n_lambda, 2);
  const double lo = std::log(lmax * opt.lambda_min_ratio);
  const double hi = std::log(lmax);
  for (int i = 0; i < k; ++i) grid.push_back(std::exp(hi + (lo - hi) * i / (k - 1)));
  return grid;
}

std::vector<Eigen::Index> selected_support(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                           const Eigen::Ref<const Eigen::VectorXd>& y,
                                           const RcvOptions& opt) {
  const double lam = cv_lasso_lambda(X, y, opt);
  const Centered c = center_rows(X, y);
  std::vector<double> grid = lambda_grid(lambda_max(c.X, c.y), opt);
  // path down to the chosen value for warm starts
  std::vector<double> path_grid;
  for (double g : grid)
    if (g > lam) path_grid.push_back(g);
  path_grid.push_back(lam);
  const auto fits = fit_lasso_path(c.X, c.y, path_grid, opt.solver);
  return fits.back().active;
}

}  // namespace

double refit_residual_variance(const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const Eigen::Ref<const Eigen::VectorXd>& y,
                      const std::vector<Eigen::Index>& support, Eigen::Index& df) {
  const Eigen::Index m = X.rows();
  const auto s = static_cast<Eigen::Index>(support.size());
  if (s >= m - 1)
    throw SelectedSetTooLarge("selected " + std::to_string(s) + " variables for a half of " +
                              std::to_string(m) + " rows");
  const Centered c = center_rows(X(Eigen::all, support), y);
  double rss = c.y.squaredNorm();
  if (s > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(c.X);
    rss = (c.y - c.X * qr.solve(c.y)).squaredNorm();
    df = m - qr.rank() - 1;
  } else {
    df = m - 1;
  }
  return rss / static_cast<double>(df);
}

double cv_lasso_lambda(const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const Eigen::Ref<const Eigen::VectorXd>& y, const RcvOptions& opt) {
  const Eigen::Index m = X.rows();
  const int k = std::max(2, std::min<int>(opt.folds, static_cast<int>(m)));
  const Centered all = center_rows(X, y);
  const std::vector<double> grid = lambda_grid(lambda_max(all.X, all.y), opt);
  std::vector<double> cv_err(grid.size(), 0.0);

  for (int f = 0; f < k; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < m; ++i) (i % k == f ? test : train).push_back(i);
    const Centered tr = center_rows(X(train, Eigen::all), y(train));
    const Eigen::MatrixXd Xte = X(test, Eigen::all).rowwise() - tr.x_mean;
    const Eigen::VectorXd yte = y(test).array() - tr.y_mean;
    const auto fits = fit_lasso_path(tr.X, tr.y, grid, opt.solver);
    for (std::size_t g = 0; g < grid.size(); ++g)
      cv_err[g] += (yte - Xte * fits[g].coef).squaredNorm();
  }
  const auto best = std::min_element(cv_err.begin(), cv_err.end()) - cv_err.begin();
  return grid[static_cast<std::size_t>(best)];
}

Sigma2Estimate rcv_from_partition(const Dataset& dataset, const std::vector<Eigen::Index>& first,
                                  const std::vector<Eigen::Index>& second,
                                  const RcvOptions& options) {
  const Eigen::MatrixXd X1 = dataset.X(first, Eigen::all);
  const Eigen::MatrixXd X2 = dataset.X(second, Eigen::all);
  const Eigen::VectorXd y1 = dataset.y(first);
  const Eigen::VectorXd y2 = dataset.y(second);

  const auto s1 = selected_support(X1, y1, options);
  const auto s2 = selected_support(X2, y2, options);
  Eigen::Index df1 = 0, df2 = 0;
  const double v12 = refit_residual_variance(X2, y2, s1, df1);
  const double v21 = refit_residual_variance(X1, y1, s2, df2);

  Sigma2Estimate est;
  est.method = Sigma2Method::RefittedCV;
  est.value = 0.5 * (v12 + v21);
  est.df_used = std::min(df1, df2);
  if (!(est.value > 0.0) || !std::isfinite(est.value))
    throw DegenerateZeroVariance("refitted cross-validation produced a non-positive variance");
  return est;
}

Sigma2Estimate estimate_sigma2_rcv(const Dataset& dataset, int lambda_cv_folds,
                                   std::uint64_t rng_seed, const RcvOptions& options) {
  const Eigen::Index n = dataset.n();
  if (n < 20) throw InvalidArgument("refitted cross-validation needs n >= 20");
  RcvOptions opt = options;
  opt.folds = lambda_cv_folds;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(rng_seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  std::vector<Eigen::Index> first(perm.begin(), perm.begin() + half);
  std::vector<Eigen::Index> second(perm.begin() + half, perm.end());
  return rcv_from_partition(dataset, first, second, opt);
}

}  // namespace penscore
