#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "cli.hpp"
#include "output.hpp"
#include "penscore/data_model.hpp"
#include "penscore/errors.hpp"
#include "penscore/normal.hpp"
#include "penscore/score_test.hpp"
#include "penscore/sim_harness.hpp"
#include "penscore/threshold_exact.hpp"
#include "penscore/variance_estimation.hpp"

namespace penscore::cli {

namespace {

using ojson = nlohmann::ordered_json;

struct Emit {
  std::string out;
  std::string format = "csv";
  std::string manifest;
  std::string plot;
};

struct DataArgs {
  std::string csv;
  std::string response;
};

struct Sigma2Args {
  std::string spec = "auto";
  std::uint64_t seed = 1;
  int folds = 10;
};

// Rows are JSON objects with identical keys; CSV takes the keys of the first
// row as its header.
struct Table {
  std::vector<std::string> columns;
  std::vector<ojson> rows;
  ojson extra = ojson::object();
};

std::string cell(const ojson& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

ojson num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

void add_emit_options(CLI::App* cmd, Emit& e) {
  cmd->add_option("--out,-o", e.out, "output file (default: standard output)");
  cmd->add_option("--format", e.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--manifest", e.manifest,
                  "run manifest path (default: <out>.manifest.json, or penscore-manifest.json "
                  "when writing CSV to standard output)");
}

void add_data_options(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--csv", d.csv, "input CSV with a header row")->required();
  cmd->add_option("--response", d.response, "response column name")->required();
}

void add_sigma2_options(CLI::App* cmd, Sigma2Args& s) {
  cmd->add_option("--sigma2", s.spec,
                  "residual variance: auto, mlr, rcv or fixed:<value> (auto = mlr when d < n - 1)");
  cmd->add_option("--seed", s.seed, "seed for refitted cross-validation");
  cmd->add_option("--rcv-folds", s.folds, "cross-validation folds inside refitted CV")
      ->check(CLI::Range(2, 1000));
}

Sigma2Estimate resolve_sigma2(const Dataset& ds, const Sigma2Args& args) {
  const std::string& s = args.spec;
  if (s.rfind("fixed:", 0) == 0) {
    Sigma2Estimate e;
    try {
      std::size_t used = 0;
      e.value = std::stod(s.substr(6), &used);
      if (used != s.size() - 6) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw InvalidArgument("bad --sigma2 value '" + s + "'");
    }
    if (!(e.value > 0.0) || !std::isfinite(e.value)) throw InvalidArgument("--sigma2 fixed value must be positive");
    e.method = Sigma2Method::Fixed;
    return e;
  }
  if (s == "mlr") return estimate_sigma2_mlr(ds);
  if (s == "rcv") return estimate_sigma2_rcv(ds, args.folds, args.seed);
  if (s == "auto") return ds.d() < ds.n() - 1 ? estimate_sigma2_mlr(ds) : estimate_sigma2_rcv(ds, args.folds, args.seed);
  throw InvalidArgument("--sigma2 must be auto, mlr, rcv or fixed:<value>");
}

class Runner {
 public:
  Runner(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
      : out_(out), err_(err) {
    for (int i = 0; i < argc; ++i) argv_.emplace_back(argv[i]);
  }

  void emit(const std::string& command, const CLI::App& app, const Emit& e, Table t,
            std::vector<std::string> inputs, const std::string& seed) {
    RunManifest m;
    m.command = command;
    m.argv = argv_;
    m.inputs = std::move(inputs);
    m.seed = seed;
    for (const CLI::Option* opt : app.get_options()) {
      if (opt->get_name() == "--help" || opt->get_name().empty()) continue;
      const auto res = opt->results();
      const std::string key = opt->get_name().substr(opt->get_name().find_first_not_of('-'));
      if (opt->get_expected_max() == 0) m.flags[key] = opt->count() > 0;
      else if (res.size() == 1) m.flags[key] = res[0];
      else if (res.empty()) m.flags[key] = opt->get_default_str();
      else m.flags[key] = res;
    }
    const ojson manifest = m.to_json();

    std::ostringstream body;
    if (e.format == "json") {
      ojson doc;
      doc["manifest"] = manifest;
      for (auto it = t.extra.begin(); it != t.extra.end(); ++it) doc[it.key()] = it.value();
      doc["columns"] = t.columns;
      doc["rows"] = t.rows;
      body << doc.dump(2) << "\n";
    } else {
      CsvWriter w(body);
      w.row(t.columns);
      for (const auto& r : t.rows) {
        std::vector<std::string> fields;
        for (const auto& c : t.columns) fields.push_back(cell(r.at(c)));
        w.row(fields);
      }
    }
    if (e.out.empty()) out_ << body.str();
    else write_text_file(e.out, body.str());

    std::string mpath = e.manifest;
    if (mpath.empty() && !e.out.empty()) mpath = e.out + ".manifest.json";
    if (mpath.empty() && e.format == "csv") mpath = "penscore-manifest.json";
    if (!mpath.empty()) write_text_file(mpath, manifest.dump(2) + "\n");
  }

  void warn(const std::string& msg) { err_ << "penscore: warning: " << msg << "\n"; }
  std::ostream& err() { return err_; }

 private:
  std::vector<std::string> argv_;
  std::ostream& out_;
  std::ostream& err_;
};

std::string seed_string(std::uint64_t s) { return std::to_string(s); }

bool uses_rcv(const Dataset& ds, const Sigma2Args& a) {
  return a.spec == "rcv" || (a.spec == "auto" && !(ds.d() < ds.n() - 1));
}

// ---- test -----------------------------------------------------------------

struct TestArgs {
  DataArgs data;
  Sigma2Args sigma2;
  Emit emit;
  double lambda = 0.0;
  std::string mode = "asymptotic";
  bool fallback = false;
};

void cmd_test(Runner& r, const CLI::App& app, const TestArgs& a) {
  const Dataset ds = dataset_from_table(read_csv_file(a.data.csv), a.data.response);
  const VarianceMode mode = parse_variance_mode(a.mode);
  if (mode != VarianceMode::Asymptotic && mode != VarianceMode::Conservative)
    throw InvalidArgument("test supports asymptotic or conservative variance; use ridge-test for ridge");
  const Sigma2Estimate s2 = resolve_sigma2(ds, a.sigma2);
  ScoreTestOptions opts;
  opts.fallback_conservative = a.fallback;
  const auto res = lasso_score_test_all(ds, a.lambda, s2.value, mode, opts);
  const LassoFit full = fit_lasso(ds.X, ds.y, a.lambda);

  Table t;
  t.columns = {"feature", "t_stat", "variance", "p_value", "active_size", "in_lasso_support"};
  for (std::size_t j = 0; j < res.size(); ++j) {
    if (res[j].variance_mode != mode)
      r.warn("feature " + ds.names[j] + ": asymptotic variance undefined, used conservative");
    t.rows.push_back({{"feature", ds.names[j]},
                      {"t_stat", res[j].t_stat},
                      {"variance", res[j].variance},
                      {"p_value", res[j].p_value},
                      {"active_size", res[j].active_size},
                      {"in_lasso_support", full.coef(static_cast<Eigen::Index>(j)) != 0.0}});
  }
  t.extra = {{"lambda", a.lambda},
             {"variance_mode", to_string(mode)},
             {"sigma2", s2.value},
             {"sigma2_method", to_string(s2.method)},
             {"n", ds.n()},
             {"d", ds.d()}};
  r.emit("test", app, a.emit, std::move(t), {a.data.csv},
         uses_rcv(ds, a.sigma2) ? seed_string(a.sigma2.seed) : "");
}

// ---- path -----------------------------------------------------------------

struct PathArgs {
  DataArgs data;
  Sigma2Args sigma2;
  Emit emit;
  std::string grid = "lin:0:50:300";
  std::string mode = "asymptotic";
  bool fallback = false;
};

void cmd_path(Runner& r, const CLI::App& app, const PathArgs& a) {
  const Dataset ds = dataset_from_table(read_csv_file(a.data.csv), a.data.response);
  const VarianceMode mode = parse_variance_mode(a.mode);
  if (mode != VarianceMode::Asymptotic && mode != VarianceMode::Conservative)
    throw InvalidArgument("path supports asymptotic or conservative variance");
  std::vector<double> grid = parse_grid(a.grid);
  for (double l : grid)
    if (!(l >= 0.0)) throw InvalidArgument("lambda grid values must be non-negative");
  std::vector<double> desc = grid;
  std::sort(desc.begin(), desc.end(), std::greater<>());
  desc.erase(std::unique(desc.begin(), desc.end()), desc.end());
  const Sigma2Estimate s2 = resolve_sigma2(ds, a.sigma2);
  const double rn = std::sqrt(static_cast<double>(ds.n()));

  const auto full = fit_lasso_path(ds.X, ds.y, desc);
  // per feature, results in ascending lambda
  std::vector<std::vector<ScoreTestResult>> res(static_cast<std::size_t>(ds.d()));
  int fallbacks = 0;
  for (Eigen::Index j = 0; j < ds.d(); ++j) {
    const FeatureSplit s = split(ds, j);
    const auto fits = fit_lasso_path(s.Z, ds.y, desc);
    auto& out = res[static_cast<std::size_t>(j)];
    for (auto it = fits.rbegin(); it != fits.rend(); ++it) {
      out.push_back(score_test_from_fit(s, ds.y, *it, s2.value, mode, a.fallback));
      if (out.back().variance_mode != mode) ++fallbacks;
    }
  }
  if (fallbacks) r.warn(std::to_string(fallbacks) + " (feature, lambda) points used the conservative variance");

  Table t;
  t.columns = {"feature", "lambda", "t_stat", "variance", "variance_mode",
               "p_value", "active_size", "in_lasso_support"};
  const std::size_t K = desc.size();
  for (Eigen::Index j = 0; j < ds.d(); ++j)
    for (std::size_t k = 0; k < K; ++k) {
      const ScoreTestResult& x = res[static_cast<std::size_t>(j)][k];
      const LassoFit& f = full[K - 1 - k];
      t.rows.push_back({{"feature", ds.names[static_cast<std::size_t>(j)]},
                        {"lambda", desc[K - 1 - k]},
                        {"t_stat", x.t_stat},
                        {"variance", x.variance},
                        {"variance_mode", to_string(x.variance_mode)},
                        {"p_value", x.p_value},
                        {"active_size", x.active_size},
                        {"in_lasso_support", f.coef(j) != 0.0}});
    }
  t.extra = {{"variance_mode", to_string(mode)},
             {"sigma2", s2.value},
             {"sigma2_method", to_string(s2.method)},
             {"n", ds.n()},
             {"d", ds.d()}};

  if (!a.emit.plot.empty()) {
    PlotSpec p;
    p.title = "Penalized score test p-values (" + to_string(mode) + " variance)";
    p.x_label = "lambda";
    p.y_label = "-log10(p-value)";
    std::vector<double> xs(desc.rbegin(), desc.rend());
    for (Eigen::Index j = 0; j < ds.d(); ++j) {
      Series s;
      s.label = ds.names[static_cast<std::size_t>(j)];
      s.color = palette(static_cast<std::size_t>(j));
      s.x = xs;
      for (const auto& x : res[static_cast<std::size_t>(j)]) s.y.push_back(-std::log10(x.p_value));
      p.series.push_back(std::move(s));
    }
    if (mode == VarianceMode::Conservative) {
      Series b;
      b.label = "lasso decision rule";
      b.color = "#000000";
      b.width = 2.0;
      b.x = xs;
      for (double l : xs) b.y.push_back(-std::log10(2.0 * normal_cdf(-rn * l / std::sqrt(s2.value))));
      p.series.push_back(std::move(b));
    }
    write_text_file(a.emit.plot, render_svg(p));
  }
  r.emit("path", app, a.emit, std::move(t), {a.data.csv},
         uses_rcv(ds, a.sigma2) ? seed_string(a.sigma2.seed) : "");
}

// ---- ridge-test -----------------------------------------------------------

struct RidgeArgs {
  DataArgs data;
  Sigma2Args sigma2;
  Emit emit;
  double lambda = 1.0;
  std::string mode = "ridge-conditional";
};

void cmd_ridge(Runner& r, const CLI::App& app, const RidgeArgs& a) {
  const Dataset ds = dataset_from_table(read_csv_file(a.data.csv), a.data.response);
  const VarianceMode mode = parse_variance_mode(a.mode);
  const Sigma2Estimate s2 = resolve_sigma2(ds, a.sigma2);
  Table t;
  t.columns = {"feature", "t_stat", "variance", "p_value"};
  for (Eigen::Index j = 0; j < ds.d(); ++j) {
    const ScoreTestResult x = ridge_score_test(split(ds, j), ds.y, a.lambda, s2.value, mode);
    t.rows.push_back({{"feature", ds.names[static_cast<std::size_t>(j)]},
                      {"t_stat", x.t_stat},
                      {"variance", x.variance},
                      {"p_value", x.p_value}});
  }
  t.extra = {{"lambda", a.lambda},
             {"variance_mode", to_string(mode)},
             {"sigma2", s2.value},
             {"sigma2_method", to_string(s2.method)}};
  r.emit("ridge-test", app, a.emit, std::move(t), {a.data.csv},
         uses_rcv(ds, a.sigma2) ? seed_string(a.sigma2.seed) : "");
}

// ---- simulate -------------------------------------------------------------

struct SimArgs {
  Emit emit;
  std::string config_file;
  SimulationConfig config;
  std::string lambdas;
  std::string methods = "penalized,oracle,slr,mlr";
  std::string mode = "asymptotic";
  std::string sigma2 = "rcv";
};

void apply_sim_config_file(const std::string& path, SimArgs& a, const CLI::App& app) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  auto given = [&](const char* flag) { return app.count(flag) > 0; };
  SimulationConfig& c = a.config;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const ojson& v = it.value();
    if (k == "n") { if (!given("--n")) c.n = v.get<Eigen::Index>(); }
    else if (k == "d") { if (!given("--d")) c.d = v.get<Eigen::Index>(); }
    else if (k == "signals") { if (!given("--signals")) c.n_signals = v.get<Eigen::Index>(); }
    else if (k == "signal_value") { if (!given("--signal-value")) c.signal_value = v.get<double>(); }
    else if (k == "ar_base") { if (!given("--ar-base")) c.ar_base = v.get<double>(); }
    else if (k == "replications") { if (!given("--replications")) c.n_replications = v.get<Eigen::Index>(); }
    else if (k == "seed") { if (!given("--seed")) c.seed = v.get<std::uint64_t>(); }
    else if (k == "threshold") { if (!given("--threshold")) c.threshold = v.get<double>(); }
    else if (k == "threads") { if (!given("--threads")) c.threads = v.get<unsigned>(); }
    else if (k == "rcv_folds") { if (!given("--rcv-folds")) c.rcv_folds = v.get<int>(); }
    else if (k == "fallback_conservative") { if (!given("--fallback-conservative")) c.fallback_conservative = v.get<bool>(); }
    else if (k == "lambdas") {
      if (!given("--lambdas")) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ",") + format_number(x.get<double>());
        a.lambdas = s;
      }
    } else if (k == "methods") {
      if (!given("--methods")) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ",") + x.get<std::string>();
        a.methods = s;
      }
    } else if (k == "variance_mode") { if (!given("--variance-mode")) a.mode = v.get<std::string>(); }
    else if (k == "sigma2") { if (!given("--sigma2")) a.sigma2 = v.get<std::string>(); }
    else throw InvalidArgument(path + ": unknown key '" + k + "'");
  }
}

void cmd_simulate(Runner& r, const CLI::App& app, SimArgs a) {
  if (!a.config_file.empty()) apply_sim_config_file(a.config_file, a, app);
  SimulationConfig& c = a.config;
  if (!a.lambdas.empty()) c.lambdas = parse_grid(a.lambdas);
  c.penalized = c.oracle = c.slr = c.mlr = false;
  std::stringstream ms(a.methods);
  for (std::string m; std::getline(ms, m, ',');) {
    if (m == "penalized") c.penalized = true;
    else if (m == "oracle") c.oracle = true;
    else if (m == "slr") c.slr = true;
    else if (m == "mlr") c.mlr = true;
    else throw InvalidArgument("unknown method '" + m + "'");
  }
  c.variance_mode = parse_variance_mode(a.mode);
  if (a.sigma2.rfind("fixed:", 0) == 0) c.fixed_sigma2 = std::stod(a.sigma2.substr(6));
  else if (a.sigma2 != "rcv") throw InvalidArgument("simulate supports --sigma2 rcv or fixed:<value>");

  const SimulationSummary s = run_study(c);
  for (const auto& w : s.warnings) r.warn(w);
  for (const auto& d : s.diagnostics) r.warn(d);

  Table t;
  t.columns = {"method", "lambda", "efp", "efp_se", "power", "power_se", "mean_support"};
  for (const auto& m : s.methods)
    t.rows.push_back({{"method", m.method},
                      {"lambda", num(m.lambda)},
                      {"efp", m.efp},
                      {"efp_se", m.efp_se},
                      {"power", m.power},
                      {"power_se", m.power_se},
                      {"mean_support", num(m.mean_support)}});
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < s.beta.size(); ++j)
    if (s.beta(j) != 0.0) support.push_back(j);
  t.extra = {{"requested", s.requested},
             {"completed", s.completed},
             {"threshold", c.effective_threshold()},
             {"signal_positions", support},
             {"warnings", s.warnings},
             {"diagnostics", s.diagnostics}};
  r.emit("simulate", app, a.emit, std::move(t),
         a.config_file.empty() ? std::vector<std::string>{} : std::vector<std::string>{a.config_file},
         seed_string(c.seed));
}

// ---- threshold ------------------------------------------------------------

struct ThresholdArgs {
  Emit emit;
  std::string gammas = "lin:0.01:0.99:50";
  double lambda = 0.2;
  double rho = 0.5;
  Eigen::Index n = 500;
  std::string levels = "0.05,0.01,0.001";
  std::string modes = "asymptotic,conservative";
  long mc = 0;
  std::uint64_t seed = 1;
};

// Rejection rates of the actual two-step test (lasso null fit on z, score
// test on x) over `draws` simulated error vectors.
struct McRates {
  std::vector<double> rate;  // [level][mode]
};

McRates monte_carlo_levels(const ThresholdScenario& sc, const std::vector<double>& levels,
                           const std::vector<VarianceMode>& modes, long draws, std::mt19937_64& rng) {
  const Eigen::Index n = sc.n;
  const double dn = static_cast<double>(n);
  std::normal_distribution<double> N(0.0, 1.0);
  // x'x = z'z = n, x'z = n rho, both centered
  Eigen::VectorXd u(n), v(n);
  for (Eigen::Index i = 0; i < n; ++i) u(i) = N(rng), v(i) = N(rng);
  u.array() -= u.mean();
  v.array() -= v.mean();
  u *= std::sqrt(dn) / u.norm();
  v -= u * (u.dot(v) / dn);
  v *= std::sqrt(dn) / v.norm();
  FeatureSplit s;
  s.x = u;
  s.Z = sc.rho * u + std::sqrt(1 - sc.rho * sc.rho) * v;
  const Eigen::VectorXd mean = sc.alpha * s.x + sc.beta * s.Z.col(0);
  std::vector<double> crit;
  for (double l : levels) crit.push_back(normal_quantile(1.0 - l / 2.0));
  std::vector<long> hits(levels.size() * modes.size(), 0);
  Eigen::VectorXd y(n);
  for (long b = 0; b < draws; ++b) {
    for (Eigen::Index i = 0; i < n; ++i) y(i) = mean(i) + N(rng);
    const LassoFit fit = fit_lasso(s.Z, y, sc.lambda);
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const ScoreTestResult t = score_test_from_fit(s, y, fit, 1.0, modes[m]);
      const double z = std::abs(t.t_stat) / std::sqrt(t.variance);
      for (std::size_t l = 0; l < levels.size(); ++l)
        if (z > crit[l]) ++hits[l * modes.size() + m];
    }
  }
  McRates r;
  for (long h : hits) r.rate.push_back(static_cast<double>(h) / static_cast<double>(draws));
  return r;
}

void cmd_threshold(Runner& r, const CLI::App& app, const ThresholdArgs& a) {
  const std::vector<double> gammas = parse_grid(a.gammas);
  const std::vector<double> levels = parse_grid(a.levels);
  std::vector<VarianceMode> modes;
  std::stringstream ms(a.modes);
  for (std::string m; std::getline(ms, m, ',');) modes.push_back(parse_variance_mode(m));

  Table t;
  t.columns = {"gamma", "nominal_level", "variance_mode", "observed_level", "relative_error",
               "quadrature_error"};
  if (a.mc > 0) {
    t.columns.push_back("mc_level");
    t.columns.push_back("mc_se");
  }
  // curves[level][mode] -> relative errors over gamma
  std::vector<std::vector<double>> curves(levels.size() * modes.size());
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    const ThresholdScenario sc = scenario_params(gammas[g], a.lambda, a.rho, a.n);
    std::optional<McRates> mc;
    if (a.mc > 0) {
      auto rng = derived_stream(a.seed, g, 0x6d63);
      mc = monte_carlo_levels(sc, levels, modes, a.mc, rng);
    }
    for (std::size_t l = 0; l < levels.size(); ++l)
      for (std::size_t m = 0; m < modes.size(); ++m) {
        const ErrorCurvePoint pt = exact_type1_error(sc, levels[l], modes[m]);
        curves[l * modes.size() + m].push_back(pt.relative_error);
        ojson row{{"gamma", pt.gamma},
                  {"nominal_level", pt.nominal_level},
                  {"variance_mode", to_string(pt.variance_mode)},
                  {"observed_level", pt.observed_level},
                  {"relative_error", pt.relative_error},
                  {"quadrature_error", pt.quadrature_error}};
        if (mc) {
          const double p = mc->rate[l * modes.size() + m];
          row["mc_level"] = p;
          row["mc_se"] = std::sqrt(p * (1 - p) / static_cast<double>(a.mc));
        }
        t.rows.push_back(std::move(row));
      }
  }
  t.extra = {{"lambda", a.lambda}, {"rho", a.rho}, {"n", a.n}};

  if (!a.emit.plot.empty()) {
    PlotSpec p;
    p.title = "Relative type-I error (lambda=" + format_number(a.lambda) + ", rho=" +
              format_number(a.rho) + ", n=" + std::to_string(a.n) + ")";
    p.x_label = "gamma = Pr(null coefficient > 0)";
    p.y_label = "observed / nominal level";
    for (std::size_t l = 0; l < levels.size(); ++l)
      for (std::size_t m = 0; m < modes.size(); ++m) {
        Series s;
        s.label = "level " + format_number(levels[l]) + ", " + to_string(modes[m]);
        s.color = palette(l);
        s.dashed = modes[m] == VarianceMode::Conservative;
        s.x = gammas;
        s.y = curves[l * modes.size() + m];
        p.series.push_back(std::move(s));
      }
    write_text_file(a.emit.plot, render_svg(p));
  }
  r.emit("threshold", app, a.emit, std::move(t), {}, a.mc > 0 ? seed_string(a.seed) : "");
}

// ---- sigma2 ---------------------------------------------------------------

struct Sigma2Cmd {
  DataArgs data;
  Sigma2Args sigma2;
  Emit emit;
};

void cmd_sigma2(Runner& r, const CLI::App& app, const Sigma2Cmd& a) {
  const Dataset ds = dataset_from_table(read_csv_file(a.data.csv), a.data.response);
  const Sigma2Estimate e = resolve_sigma2(ds, a.sigma2);
  Table t;
  t.columns = {"method", "sigma2", "sigma", "df_used"};
  t.rows.push_back({{"method", to_string(e.method)},
                    {"sigma2", e.value},
                    {"sigma", std::sqrt(e.value)},
                    {"df_used", e.df_used}});
  r.emit("sigma2", app, a.emit, std::move(t), {a.data.csv},
         uses_rcv(ds, a.sigma2) ? seed_string(a.sigma2.seed) : "");
}

// ---- verify ---------------------------------------------------------------

struct VerifyArgs {
  DataArgs data;
  Emit emit;
  double lambda = 0.0;
  std::string penalty = "lasso";
};

void cmd_verify(Runner& r, const CLI::App& app, const VerifyArgs& a) {
  const Dataset ds = dataset_from_table(read_csv_file(a.data.csv), a.data.response);
  Penalty pen = Penalty::lasso();
  if (a.penalty.rfind("enet:", 0) == 0) pen = Penalty::elastic_net(std::stod(a.penalty.substr(5)));
  else if (a.penalty != "lasso") throw InvalidArgument("--penalty must be lasso or enet:<mix>");
  const CorrespondenceReport rep = verify_sparsity_correspondence(ds, a.lambda, pen);
  Table t;
  t.columns = {"feature", "in_support", "score_reject", "t_stat", "margin", "tie", "agree"};
  for (const auto& e : rep.entries)
    t.rows.push_back({{"feature", ds.names[static_cast<std::size_t>(e.feature)]},
                      {"in_support", e.in_support},
                      {"score_reject", e.score_reject},
                      {"t_stat", e.t_stat},
                      {"margin", e.margin},
                      {"tie", e.tie},
                      {"agree", e.agree}});
  t.extra = {{"lambda", a.lambda},
             {"threshold", rep.threshold},
             {"tie_band", rep.tie_band},
             {"ties", rep.ties},
             {"disagreements", rep.disagreements},
             {"all_agree", rep.all_agree}};
  r.err() << "penscore: verify: " << rep.entries.size() << " features, " << rep.disagreements
          << " disagreements, " << rep.ties << " ties\n";
  r.emit("verify", app, a.emit, std::move(t), {a.data.csv}, "");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Penalized score tests for high-dimensional linear regression", "penscore"};
  app.set_version_flag("--version", PENSCORE_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  TestArgs test;
  auto* c_test = app.add_subcommand("test", "per-feature lasso score test at one lambda");
  add_data_options(c_test, test.data);
  add_sigma2_options(c_test, test.sigma2);
  add_emit_options(c_test, test.emit);
  c_test->add_option("--lambda", test.lambda, "penalty level")->required()->check(CLI::NonNegativeNumber);
  c_test->add_option("--variance-mode", test.mode, "asymptotic or conservative");
  c_test->add_flag("--fallback-conservative", test.fallback,
                   "use the conservative variance where the asymptotic one is undefined");

  PathArgs path;
  auto* c_path = app.add_subcommand("path", "score tests along a lambda grid");
  add_data_options(c_path, path.data);
  add_sigma2_options(c_path, path.sigma2);
  add_emit_options(c_path, path.emit);
  c_path->add_option("--grid", path.grid, "lin:a:b:k, log:a:b:k or a comma list");
  c_path->add_option("--variance-mode", path.mode, "asymptotic or conservative");
  c_path->add_flag("--fallback-conservative", path.fallback,
                   "use the conservative variance where the asymptotic one is undefined");
  c_path->add_option("--plot", path.emit.plot, "write -log10 p-value curves as SVG");

  RidgeArgs ridge;
  auto* c_ridge = app.add_subcommand("ridge-test", "per-feature ridge score test");
  add_data_options(c_ridge, ridge.data);
  add_sigma2_options(c_ridge, ridge.sigma2);
  add_emit_options(c_ridge, ridge.emit);
  c_ridge->add_option("--lambda", ridge.lambda, "ridge penalty level")->required()->check(CLI::PositiveNumber);
  c_ridge->add_option("--variance-mode", ridge.mode, "ridge-conditional or ridge-marginal");

  SimArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "type-I error and power simulation");
  add_emit_options(c_sim, sim.emit);
  c_sim->add_option("--config", sim.config_file, "JSON file with simulation settings");
  c_sim->add_option("--n", sim.config.n, "sample size");
  c_sim->add_option("--d", sim.config.d, "number of features");
  c_sim->add_option("--signals", sim.config.n_signals, "number of nonzero coefficients");
  c_sim->add_option("--signal-value", sim.config.signal_value, "value of each nonzero coefficient");
  c_sim->add_option("--ar-base", sim.config.ar_base, "feature correlation base r, S_jk = r^|j-k|");
  c_sim->add_option("--lambdas", sim.lambdas, "penalty levels (grid spec or comma list)");
  c_sim->add_option("--replications", sim.config.n_replications, "number of replications");
  c_sim->add_option("--seed", sim.config.seed, "master seed");
  c_sim->add_option("--threshold", sim.config.threshold, "p-value cut-off (default 1/d)");
  c_sim->add_option("--methods", sim.methods, "comma list of penalized, oracle, slr, mlr");
  c_sim->add_option("--variance-mode", sim.mode, "asymptotic or conservative");
  c_sim->add_flag("--fallback-conservative", sim.config.fallback_conservative,
                  "use the conservative variance where the asymptotic one is undefined");
  c_sim->add_option("--sigma2", sim.sigma2, "rcv or fixed:<value>");
  c_sim->add_option("--rcv-folds", sim.config.rcv_folds, "cross-validation folds inside refitted CV");
  c_sim->add_option("--threads", sim.config.threads, "worker threads (0 = all cores)");

  ThresholdArgs thr;
  auto* c_thr = app.add_subcommand("threshold", "exact type-I error of the two-variable test");
  add_emit_options(c_thr, thr.emit);
  c_thr->add_option("--gamma-grid", thr.gammas, "grid of gamma values in (0, 1)");
  c_thr->add_option("--lambda", thr.lambda, "penalty level")->check(CLI::PositiveNumber);
  c_thr->add_option("--rho", thr.rho, "correlation between x and z")->check(CLI::Range(-0.999999, 0.999999));
  c_thr->add_option("--n", thr.n, "sample size")->check(CLI::Range(2, 100000000));
  c_thr->add_option("--levels", thr.levels, "nominal levels");
  c_thr->add_option("--modes", thr.modes, "comma list of asymptotic, conservative");
  c_thr->add_option("--mc-check", thr.mc, "append a Monte-Carlo estimate from N draws")->check(CLI::NonNegativeNumber);
  c_thr->add_option("--seed", thr.seed, "seed for --mc-check");
  c_thr->add_option("--plot", thr.emit.plot, "write relative-error curves as SVG");

  Sigma2Cmd sig;
  auto* c_sig = app.add_subcommand("sigma2", "residual variance estimate");
  add_data_options(c_sig, sig.data);
  add_sigma2_options(c_sig, sig.sigma2);
  add_emit_options(c_sig, sig.emit);

  VerifyArgs ver;
  auto* c_ver = app.add_subcommand("verify", "lasso support versus score-test decisions");
  add_data_options(c_ver, ver.data);
  add_emit_options(c_ver, ver.emit);
  c_ver->add_option("--lambda", ver.lambda, "penalty level")->required()->check(CLI::NonNegativeNumber);
  c_ver->add_option("--penalty", ver.penalty, "lasso or enet:<mix>");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  Runner r(argc, argv, out, err);
  try {
    if (*c_test) cmd_test(r, *c_test, test);
    else if (*c_path) cmd_path(r, *c_path, path);
    else if (*c_ridge) cmd_ridge(r, *c_ridge, ridge);
    else if (*c_sim) cmd_simulate(r, *c_sim, sim);
    else if (*c_thr) cmd_threshold(r, *c_thr, thr);
    else if (*c_sig) cmd_sigma2(r, *c_sig, sig);
    else if (*c_ver) cmd_verify(r, *c_ver, ver);
  } catch (const std::exception& e) {
    err << "penscore: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace penscore::cli
