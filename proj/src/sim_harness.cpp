#include "penscore/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "penscore/errors.hpp"
#include "penscore/normal.hpp"
#include "penscore/variance_estimation.hpp"

namespace penscore {

namespace {

constexpr std::uint64_t kTagDesign = 0x64657369676eULL;
constexpr std::uint64_t kTagTruth = 0x7472757468ULL;

struct ReplicationOutcome {
  bool ok = false;
  std::string diagnostic;
  // rows: methods in summary order
  std::vector<double> false_positives;
  std::vector<double> power;
  std::vector<double> support;
};

std::vector<double> descending_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments mean_and_se(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  const double k = static_cast<double>(xs.size());
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.se = std::sqrt(ss / (k - 1.0) / k);
  }
  return m;
}

}  // namespace

void SimulationConfig::validate() const {
  if (n < 2 || d < 1) throw InvalidArgument("simulation needs n >= 2 and d >= 1");
  if (n_signals < 0 || n_signals > d) throw InvalidArgument("n_signals must lie in [0, d]");
  if (!(std::abs(ar_base) < 1.0)) throw InvalidArgument("ar_base must lie in (-1, 1)");
  if (n_replications < 1) throw InvalidArgument("need at least one replication");
  const double t = effective_threshold();
  if (!(t > 0.0 && t < 1.0)) throw InvalidArgument("threshold must lie in (0, 1)");
  for (double l : lambdas)
    if (!(l >= 0.0)) throw InvalidArgument("lambdas must be non-negative");
  if (penalized && lambdas.empty()) throw InvalidArgument("penalized method needs lambdas");
}

const MethodSummary* SimulationSummary::find(const std::string& method, double lambda) const {
  for (const auto& m : methods)
    if (m.method == method && (method != "penalized" || m.lambda == lambda)) return &m;
  return nullptr;
}

std::mt19937_64 derived_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  return std::mt19937_64(seq);
}

Dataset generate_design(const SimulationConfig& config, std::mt19937_64& rng) {
  const Eigen::Index n = config.n;
  const Eigen::Index d = config.d;
  const double r = config.ar_base;
  const double innov = std::sqrt(1.0 - r * r);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd raw(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    double prev = normal(rng);
    raw(i, 0) = prev;
    for (Eigen::Index j = 1; j < d; ++j) {
      prev = r * prev + innov * normal(rng);
      raw(i, j) = prev;
    }
  }
  return standardize(raw, Eigen::VectorXd::Zero(n));
}

Eigen::VectorXd generate_truth(const SimulationConfig& config) {
  auto rng = derived_stream(config.seed, static_cast<std::uint64_t>(config.d), kTagTruth);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(config.d));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // partial Fisher-Yates keeps positions a function of (d, seed) only
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(config.d);
  for (Eigen::Index k = 0; k < config.n_signals; ++k) {
    std::uniform_int_distribution<Eigen::Index> pick(k, config.d - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
    beta(idx[static_cast<std::size_t>(k)]) = config.signal_value;
  }
  return beta;
}

ReplicationPValues replication_p_values(const SimulationConfig& config, const Dataset& data,
                                        const Eigen::VectorXd& beta, double sigma2) {
  const Eigen::Index d = data.d();
  ReplicationPValues out;
  out.sigma2 = sigma2;
  SolverOptions solver;

  if (config.penalized) {
    out.lambdas = descending_unique(config.lambdas);
    const auto full_path = fit_lasso_path(data.X, data.y, out.lambdas, solver);
    for (const auto& f : full_path) out.support_sizes.push_back(static_cast<Eigen::Index>(f.active.size()));
    out.penalized.assign(out.lambdas.size(), Eigen::VectorXd(d));
    for (Eigen::Index j = 0; j < d; ++j) {
      const FeatureSplit s = split(data, j);
      const auto others = complement_indices(d, j);
      Eigen::VectorXd warm = full_path.front().coef(others);
      for (std::size_t l = 0; l < out.lambdas.size(); ++l) {
        const LassoFit fit = fit_lasso(s.Z, data.y, out.lambdas[l], warm, solver);
        warm = fit.coef;
        out.penalized[l](j) = score_test_from_fit(s, data.y, fit, sigma2, config.variance_mode,
                                                  config.fallback_conservative)
                                  .p_value;
      }
    }
  }
  if (config.oracle) {
    out.oracle.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      std::vector<Eigen::Index> support;
      for (Eigen::Index k = 0; k < d; ++k)
        if (k != j && beta(k) != 0.0) support.push_back(k);
      out.oracle(j) = classical_score_test(data.X.col(j), data.X(Eigen::all, support), data.y, sigma2).p_value;
    }
  }
  if (config.slr) {
    out.slr.resize(d);
    for (Eigen::Index j = 0; j < d; ++j)
      out.slr(j) = classical_score_test(data.X.col(j), Eigen::MatrixXd(data.n(), 0), data.y, sigma2).p_value;
  }
  if (config.mlr && d < data.n() - 1) {
    out.mlr.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const FeatureSplit s = split(data, j);
      out.mlr(j) = classical_score_test(s.x, s.Z, data.y, sigma2).p_value;
    }
  }
  return out;
}

SimulationSummary run_study(const SimulationConfig& config) {
  config.validate();
  SimulationSummary summary;
  summary.requested = config.n_replications;
  summary.beta = generate_truth(config);
  const Eigen::VectorXd& beta = summary.beta;
  const double cut = config.effective_threshold();
  const bool run_mlr = config.mlr && config.d < config.n - 1;
  if (config.mlr && !run_mlr)
    summary.warnings.push_back("MLR skipped: requires d < n - 1 (d = " + std::to_string(config.d) +
                               ", n = " + std::to_string(config.n) + ")");

  const std::vector<double> lambdas =
      config.penalized ? descending_unique(config.lambdas) : std::vector<double>{};
  std::vector<MethodSummary> methods;
  for (double l : lambdas) methods.push_back({"penalized", l});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (config.oracle) methods.push_back({"oracle", nan});
  if (config.slr) methods.push_back({"slr", nan});
  if (run_mlr) methods.push_back({"mlr", nan});

  const auto n_signal = static_cast<double>((beta.array() != 0.0).count());
  auto tally = [&](const Eigen::VectorXd& p, ReplicationOutcome& o) {
    double fp = 0.0, tp = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      if (!(p(j) < cut)) continue;
      if (beta(j) == 0.0) fp += 1.0;
      else tp += 1.0;
    }
    o.false_positives.push_back(fp);
    o.power.push_back(n_signal > 0.0 ? tp / n_signal : 0.0);
  };

  auto run_one = [&](Eigen::Index rep) {
    ReplicationOutcome o;
    try {
      auto rng = derived_stream(config.seed, static_cast<std::uint64_t>(rep), kTagDesign);
      Dataset data = generate_design(config, rng);
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::VectorXd y = data.X * beta;
      for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += normal(rng);
      data.y = y.array() - y.mean();
      const std::uint64_t rcv_seed = rng();
      const double sigma2 = config.fixed_sigma2
                                ? *config.fixed_sigma2
                                : estimate_sigma2_rcv(data, config.rcv_folds, rcv_seed).value;
      const ReplicationPValues pv = replication_p_values(config, data, beta, sigma2);
      for (std::size_t l = 0; l < pv.penalized.size(); ++l) {
        tally(pv.penalized[l], o);
        o.support.push_back(static_cast<double>(pv.support_sizes[l]));
      }
      if (config.oracle) tally(pv.oracle, o);
      if (config.slr) tally(pv.slr, o);
      if (run_mlr) tally(pv.mlr, o);
      o.ok = true;
    } catch (const std::exception& e) {
      o.ok = false;
      o.diagnostic = "replication " + std::to_string(rep) + ": " + e.what();
    }
    return o;
  };

  std::vector<ReplicationOutcome> outcomes(static_cast<std::size_t>(config.n_replications));
  unsigned workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(config.n_replications));
  if (workers <= 1) {
    for (Eigen::Index r = 0; r < config.n_replications; ++r) outcomes[static_cast<std::size_t>(r)] = run_one(r);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (Eigen::Index r = w; r < config.n_replications; r += workers)
          outcomes[static_cast<std::size_t>(r)] = run_one(r);
      });
    for (auto& t : pool) t.join();
  }

  // reduction in replication order
  std::vector<std::vector<double>> fp(methods.size()), pw(methods.size()), sup(lambdas.size());
  for (const auto& o : outcomes) {
    if (!o.ok) {
      summary.diagnostics.push_back(o.diagnostic);
      continue;
    }
    ++summary.completed;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      fp[m].push_back(o.false_positives[m]);
      pw[m].push_back(o.power[m]);
    }
    for (std::size_t l = 0; l < lambdas.size(); ++l) sup[l].push_back(o.support[l]);
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const Moments e = mean_and_se(fp[m]);
    const Moments p = mean_and_se(pw[m]);
    methods[m].efp = e.mean;
    methods[m].efp_se = e.se;
    methods[m].power = p.mean;
    methods[m].power_se = p.se;
    if (m < lambdas.size()) {
      const Moments s = mean_and_se(sup[m]);
      methods[m].mean_support = s.mean;
      methods[m].mean_support_se = s.se;
    } else {
      methods[m].mean_support = nan;
      methods[m].mean_support_se = nan;
    }
  }
  summary.methods = std::move(methods);
  return summary;
}

}  // namespace penscore
