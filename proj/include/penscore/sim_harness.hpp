#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "penscore/data_model.hpp"
#include "penscore/score_test.hpp"

namespace penscore {

struct SimulationConfig {
  Eigen::Index n = 200;
  Eigen::Index d = 100;
  Eigen::Index n_signals = 10;
  double signal_value = 0.4;
  double ar_base = 0.5;  // S_jk = ar_base^|j-k|
  std::vector<double> lambdas{0.6, 0.3, 0.1, 0.05};
  Eigen::Index n_replications = 100;
  std::uint64_t seed = 1;
  double threshold = 0.0;  // 0 selects 1/d

  bool penalized = true;
  bool oracle = true;
  bool slr = true;
  bool mlr = true;

  VarianceMode variance_mode = VarianceMode::Asymptotic;
  bool fallback_conservative = false;
  std::optional<double> fixed_sigma2;  // otherwise refitted CV per replication
  int rcv_folds = 10;
  unsigned threads = 0;  // 0 selects hardware concurrency

  double effective_threshold() const {
    return threshold > 0.0 ? threshold : 1.0 / static_cast<double>(d);
  }
  void validate() const;
};

struct MethodSummary {
  std::string method;  // "penalized", "oracle", "slr", "mlr"
  double lambda = 0.0;  // NaN for the unpenalized methods
  double efp = 0.0;
  double efp_se = 0.0;
  double power = 0.0;
  double power_se = 0.0;
  double mean_support = 0.0;  // full-model lasso support size; NaN if not penalized
  double mean_support_se = 0.0;
};

struct SimulationSummary {
  std::vector<MethodSummary> methods;
  Eigen::Index requested = 0;
  Eigen::Index completed = 0;
  Eigen::VectorXd beta;
  std::vector<std::string> warnings;
  std::vector<std::string> diagnostics;  // one per aborted replication

  const MethodSummary* find(const std::string& method, double lambda = 0.0) const;
};

// Independent stream for (seed, replication, tag); replications can be run
// in any order and reproduce the same draws.
std::mt19937_64 derived_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t tag);

// Rows i.i.d. N_d(0, S) by the AR(1) recursion, then standardized (y is zero).
Dataset generate_design(const SimulationConfig& config, std::mt19937_64& rng);

// n_signals positions set to signal_value; positions depend only on (d, seed).
Eigen::VectorXd generate_truth(const SimulationConfig& config);

// Full table of per-feature p-values for one simulated dataset, used by
// run_study and exposed for tests.
struct ReplicationPValues {
  std::vector<double> lambdas;              // descending
  std::vector<Eigen::VectorXd> penalized;   // one per lambda
  std::vector<Eigen::Index> support_sizes;  // one per lambda
  Eigen::VectorXd oracle, slr, mlr;         // empty when not requested
  double sigma2 = 0.0;
};

ReplicationPValues replication_p_values(const SimulationConfig& config, const Dataset& data,
                                        const Eigen::VectorXd& beta, double sigma2);

SimulationSummary run_study(const SimulationConfig& config);

}  // namespace penscore
