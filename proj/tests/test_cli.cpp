#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "oracles.hpp"
#include "output.hpp"
#include "penscore/data_model.hpp"
#include "penscore/normal.hpp"
#include "penscore/threshold_exact.hpp"

namespace fs = std::filesystem;
using namespace penscore;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "penscore");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("penscore_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// Raw data: response first, then d features, some correlation.
std::string write_data(const TempDir& dir, Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  const std::string path = dir.file("data.csv");
  std::ofstream f(path);
  f << "y";
  for (Eigen::Index j = 0; j < d; ++j) f << ",f" << j;
  f << "\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> x(static_cast<std::size_t>(d));
    const double common = N(rng);
    double y = N(rng);
    for (Eigen::Index j = 0; j < d; ++j) {
      x[static_cast<std::size_t>(j)] = 0.5 * common + N(rng) + 3.0 * static_cast<double>(j);
      if (j < 3) y += (0.8 - 0.3 * static_cast<double>(j)) * x[static_cast<std::size_t>(j)];
    }
    f << cli::format_number(y + 10.0);
    for (double v : x) f << "," << cli::format_number(v);
    f << "\n";
  }
  return path;
}

// Parses the CSV emitted by the tool; returns rows of fields with the header first.
std::vector<std::vector<std::string>> parse_output(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::stringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  REQUIRE(it != header.end());
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

TEST_CASE("grid specs") {
  const auto lin = cli::parse_grid("lin:0:1:5");
  REQUIRE(lin.size() == 5);
  CHECK(lin.front() == 0.0);
  CHECK(lin[2] == doctest::Approx(0.5));
  CHECK(lin.back() == 1.0);

  const auto lg = cli::parse_grid("log:0.01:1:3");
  REQUIRE(lg.size() == 3);
  CHECK(lg.front() == 0.01);
  CHECK(lg[1] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(lg.back() == 1.0);

  const auto list = cli::parse_grid("0.3, 0.1,2");
  CHECK(list == std::vector<double>{0.3, 0.1, 2.0});
  CHECK(cli::parse_grid("lin:2:2:1") == std::vector<double>{2.0});

  CHECK_THROWS(cli::parse_grid(""));
  CHECK_THROWS(cli::parse_grid("lin:0:1"));
  CHECK_THROWS(cli::parse_grid("lin:0:1:0"));
  CHECK_THROWS(cli::parse_grid("log:0:1:4"));
  CHECK_THROWS(cli::parse_grid("0.1,abc"));
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, 0.0}) {
    CHECK(std::stod(cli::format_number(v)) == v);
  }
  CHECK(cli::format_number(std::nan("")) == "NaN");
  CHECK(cli::format_number(HUGE_VAL) == "Inf");
  CHECK(cli::format_number(-HUGE_VAL) == "-Inf");
}

TEST_CASE("csv quoting") {
  CHECK(cli::CsvWriter::quote("plain") == "plain");
  CHECK(cli::CsvWriter::quote("a,b") == "\"a,b\"");
  CHECK(cli::CsvWriter::quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(cli::CsvWriter::quote("two\nlines") == "\"two\nlines\"");
  std::ostringstream s;
  cli::CsvWriter w(s);
  w.row({"x", "y,z"});
  CHECK(s.str() == "x,\"y,z\"\r\n");
}

TEST_CASE("sha256 of a known string") {
  TempDir dir;
  const std::string p = dir.file("abc.txt");
  std::ofstream(p) << "abc";
  CHECK(cli::sha256_file(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("svg output is a well-formed document with every series") {
  cli::PlotSpec p;
  p.title = "t <&>";
  p.series.push_back({"a", {0, 1, 2}, {1, 2, std::nan("")}, "#ff0000", false, 1.5});
  p.series.push_back({"b", {0, 1, 2}, {0, 1, 4}, "#00ff00", true, 1.5});
  const std::string svg = cli::render_svg(p);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("t &lt;&amp;&gt;") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(svg.find("#00ff00") != std::string::npos);
}

TEST_CASE("test at lambda zero is the classical score test") {
  TempDir dir;
  const Eigen::Index n = 60, d = 5;
  const std::string csv = write_data(dir, n, d, 11);
  const double sigma2 = 1.7;
  const Run r = run_cli({"test", "--csv", csv, "--response", "y", "--lambda", "0", "--sigma2",
                         "fixed:1.7", "--manifest", dir.file("m.json")});
  REQUIRE(r.code == 0);
  const auto rows = parse_output(r.out);
  REQUIRE(rows.size() == static_cast<std::size_t>(d + 1));
  const auto& h = rows[0];

  const Dataset ds = dataset_from_table(read_csv_file(csv), "y");
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::MatrixXd Z(n, d - 1);
    for (Eigen::Index k = 0, c = 0; k < d; ++k)
      if (k != j) Z.col(c++) = ds.X.col(k);
    const Eigen::VectorXd x = ds.X.col(j);
    auto qr = Z.colPivHouseholderQr();
    const Eigen::VectorXd ry = ds.y - Z * qr.solve(ds.y);
    const Eigen::VectorXd rx = x - Z * qr.solve(x);
    const double t = x.dot(ry) / std::sqrt(static_cast<double>(n));
    const double v = sigma2 * rx.squaredNorm() / static_cast<double>(n);
    const auto& row = rows[static_cast<std::size_t>(j + 1)];
    CHECK(row[column(h, "feature")] == "f" + std::to_string(j));
    CHECK(std::stod(row[column(h, "t_stat")]) == doctest::Approx(t).epsilon(1e-7));
    CHECK(std::stod(row[column(h, "variance")]) == doctest::Approx(v).epsilon(1e-7));
    CHECK(std::stod(row[column(h, "p_value")]) ==
          doctest::Approx(std::erfc(std::abs(t) / std::sqrt(2 * v))).epsilon(1e-6));
    CHECK(row[column(h, "in_lasso_support")] == "true");
  }
}

TEST_CASE("test at a huge lambda is simple linear regression") {
  TempDir dir;
  const Eigen::Index n = 50, d = 4;
  const std::string csv = write_data(dir, n, d, 12);
  const Run r = run_cli({"test", "--csv", csv, "--response", "y", "--lambda", "1e6", "--sigma2",
                         "fixed:2", "--manifest", dir.file("m.json")});
  REQUIRE(r.code == 0);
  const auto rows = parse_output(r.out);
  const auto& h = rows[0];
  const Dataset ds = dataset_from_table(read_csv_file(csv), "y");
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto& row = rows[static_cast<std::size_t>(j + 1)];
    const double t = ds.X.col(j).dot(ds.y) / std::sqrt(static_cast<double>(n));
    CHECK(std::stod(row[column(h, "t_stat")]) == doctest::Approx(t).epsilon(1e-12));
    CHECK(std::stod(row[column(h, "variance")]) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(row[column(h, "active_size")] == "0");
    CHECK(row[column(h, "in_lasso_support")] == "false");
  }
}

TEST_CASE("a one-point path repeats the single-lambda test") {
  TempDir dir;
  const std::string csv = write_data(dir, 40, 6, 13);
  const std::vector<std::string> common{"--csv", csv, "--response", "y", "--sigma2", "fixed:1",
                                        "--manifest", dir.file("m.json")};
  auto args = common;
  args.insert(args.begin(), {"test", "--lambda", "0.4"});
  const auto t = parse_output(run_cli(args).out);
  args = common;
  args.insert(args.begin(), {"path", "--grid", "0.4"});
  const auto p = parse_output(run_cli(args).out);
  REQUIRE(t.size() == p.size());
  for (const char* c : {"feature", "t_stat", "variance", "p_value", "active_size", "in_lasso_support"})
    for (std::size_t i = 1; i < t.size(); ++i)
      CHECK(t[i][column(t[0], c)] == p[i][column(p[0], c)]);
}

TEST_CASE("path rows are ordered by feature then ascending lambda") {
  TempDir dir;
  const std::string csv = write_data(dir, 40, 3, 14);
  const Run r = run_cli({"path", "--csv", csv, "--response", "y", "--grid", "2,0,1", "--sigma2",
                         "fixed:1", "--variance-mode", "conservative", "--manifest",
                         dir.file("m.json"), "--plot", dir.file("p.svg")});
  REQUIRE(r.code == 0);
  const auto rows = parse_output(r.out);
  REQUIRE(rows.size() == 10);
  const std::size_t lc = column(rows[0], "lambda");
  CHECK(rows[1][lc] == "0");
  CHECK(rows[2][lc] == "1");
  CHECK(rows[3][lc] == "2");
  CHECK(rows[4][column(rows[0], "feature")] == "f1");
  CHECK(fs::exists(dir.file("p.svg")));
}

TEST_CASE("threshold rows equal the library computation") {
  TempDir dir;
  const Run r = run_cli({"threshold", "--gamma-grid", "0.3", "--levels", "0.05", "--modes",
                         "asymptotic", "--lambda", "0.2", "--rho", "0.5", "--n", "500",
                         "--manifest", dir.file("m.json")});
  REQUIRE(r.code == 0);
  const auto rows = parse_output(r.out);
  REQUIRE(rows.size() == 2);
  const auto pt = exact_type1_error(scenario_params(0.3, 0.2, 0.5, 500), 0.05, VarianceMode::Asymptotic);
  CHECK(std::stod(rows[1][column(rows[0], "observed_level")]) == pt.observed_level);
  CHECK(rows[1][column(rows[0], "variance_mode")] == "asymptotic");
}

TEST_CASE("threshold monte carlo check lands near the exact level") {
  TempDir dir;
  const Run r = run_cli({"threshold", "--gamma-grid", "0.7", "--levels", "0.05", "--modes",
                         "conservative", "--mc-check", "4000", "--seed", "5", "--manifest",
                         dir.file("m.json")});
  REQUIRE(r.code == 0);
  const auto rows = parse_output(r.out);
  const auto& h = rows[0];
  const double exact = std::stod(rows[1][column(h, "observed_level")]);
  const double mc = std::stod(rows[1][column(h, "mc_level")]);
  const double se = std::sqrt(exact * (1 - exact) / 4000.0);
  CHECK(std::abs(mc - exact) < 4 * se);
}

TEST_CASE("simulate is deterministic and json output is complete") {
  TempDir dir;
  const std::vector<std::string> args{"simulate", "--n", "50", "--d", "15", "--signals", "3",
                                      "--replications", "4", "--lambdas", "0.3", "--seed", "9",
                                      "--sigma2", "fixed:1", "--format", "json"};
  const Run a = run_cli(args);
  const Run b = run_cli(args);
  REQUIRE(a.code == 0);
  const auto ja = nlohmann::json::parse(a.out);
  const auto jb = nlohmann::json::parse(b.out);
  CHECK(ja["rows"] == jb["rows"]);
  CHECK(ja["rows"].size() == 4);
  CHECK(ja["completed"] == 4);
  CHECK(ja["manifest"]["seed"] == "9");
  CHECK(ja["columns"][0] == "method");
}

TEST_CASE("simulate reads a json config and flags override it") {
  TempDir dir;
  const std::string cfg = dir.file("sim.json");
  std::ofstream(cfg) << R"({"n": 40, "d": 12, "signals": 2, "replications": 3, "lambdas": [0.5],
                            "methods": ["penalized", "slr"], "sigma2": "fixed:1", "seed": 4})";
  const Run r = run_cli({"simulate", "--config", cfg, "--replications", "2", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["completed"] == 2);
  CHECK(j["rows"].size() == 2);
  CHECK(j["manifest"]["inputs"][0]["path"] == cfg);

  std::ofstream(dir.file("bad.json")) << R"({"nn": 40})";
  CHECK(run_cli({"simulate", "--config", dir.file("bad.json")}).code == 1);
}

TEST_CASE("sigma2 and ridge-test and verify run") {
  TempDir dir;
  const std::string csv = write_data(dir, 50, 4, 15);
  const std::string m = dir.file("m.json");
  const Run s = run_cli({"sigma2", "--csv", csv, "--response", "y", "--sigma2", "mlr", "--manifest", m});
  REQUIRE(s.code == 0);
  const auto rows = parse_output(s.out);
  CHECK(rows[1][column(rows[0], "method")] == "mlr");
  CHECK(rows[1][column(rows[0], "df_used")] == "45");

  const Run rt = run_cli({"ridge-test", "--csv", csv, "--response", "y", "--lambda", "0.5",
                          "--sigma2", "fixed:1", "--manifest", m});
  REQUIRE(rt.code == 0);
  CHECK(parse_output(rt.out).size() == 5);

  const Run v = run_cli({"verify", "--csv", csv, "--response", "y", "--lambda", "0.2",
                         "--penalty", "enet:0.5", "--format", "json"});
  REQUIRE(v.code == 0);
  const auto j = nlohmann::json::parse(v.out);
  CHECK(j["disagreements"] == 0);
  CHECK(j["rows"].size() == 4);
}

TEST_CASE("output file gets a manifest sidecar with input hashes") {
  TempDir dir;
  const std::string csv = write_data(dir, 30, 3, 16);
  const std::string out = dir.file("res.csv");
  const Run r = run_cli({"test", "--csv", csv, "--response", "y", "--lambda", "0.1", "--sigma2",
                         "rcv", "--seed", "77", "--out", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  REQUIRE(fs::exists(out + ".manifest.json"));
  std::ifstream mf(out + ".manifest.json");
  const auto m = nlohmann::json::parse(mf);
  CHECK(m["command"] == "test");
  CHECK(m["seed"] == "77");
  CHECK(m["flags"]["lambda"] == "0.1");
  CHECK(m["inputs"][0]["sha256"] == cli::sha256_file(csv));
  CHECK(m["argv"].size() == 14);
}

TEST_CASE("errors map to exit codes") {
  TempDir dir;
  const Run missing = run_cli({"test", "--csv", dir.file("none.csv"), "--response", "y", "--lambda", "1"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("penscore: error:") != std::string::npos);

  const std::string csv = write_data(dir, 30, 3, 17);
  CHECK(run_cli({"test", "--csv", csv, "--response", "nope", "--lambda", "1"}).code == 1);
  CHECK(run_cli({"test", "--csv", csv, "--response", "y", "--lambda", "-1"}).code != 0);
  CHECK(run_cli({"test", "--csv", csv, "--response", "y", "--lambda", "1", "--sigma2", "fixed:-2"}).code == 1);
  CHECK(run_cli({"threshold", "--gamma-grid", "1.5"}).code == 1);
  CHECK(run_cli({}).code != 0);
  CHECK(run_cli({"--help"}).code == 0);
}
