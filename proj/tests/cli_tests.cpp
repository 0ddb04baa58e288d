// Integration tests for the command-line tool. Invoked by ctest with the
// binary path and a scratch directory as arguments.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "spatialgof.hpp"

namespace {

int failures = 0;

#define CHECK_TRUE(cond)                                                     \
  do {                                                                       \
    if (!(cond)) {                                                           \
      std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << "  " << #cond \
                << "\n";                                                     \
      ++failures;                                                            \
    }                                                                        \
  } while (0)

std::string cli_path;
std::filesystem::path scratch;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  const std::filesystem::path out = scratch / "stdout.txt";
  const std::filesystem::path err = scratch / "stderr.txt";
  const std::string cmd =
      cli_path + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

spatialgof::SpatialDataset make_null_dataset(std::uint64_t seed) {
  spatialgof::ScenarioConfig cfg;
  cfg.grid_side = 12;
  cfg.sigma = 0.4;
  cfg.range = 0.2;
  cfg.bandwidths = {spatialgof::BandwidthMatrix::scalar(2, 0.8)};
  cfg.seed = seed;
  return spatialgof::generate_field(cfg, 0).dataset;
}

void test_report_round_trip() {
  using namespace spatialgof;
  const SpatialDataset data = make_null_dataset(404);
  const std::filesystem::path csv = scratch / "null.csv";
  write_dataset_csv(csv.string(), data);

  const std::string args = "test --data " + csv.string() +
                           " --bandwidth 0.8 --B 99 --seed 11 --alpha 0.05";
  const RunResult first = run_cli(args);
  CHECK_TRUE(first.exit_code == 0 || first.exit_code == 2);
  const nlohmann::json j = nlohmann::json::parse(first.out);

  // The CLI path must reproduce the in-process statistic bit for bit.
  const QuadratureGrid q = QuadratureGrid::bounding_box(data, 30);
  const TestReport direct = bootstrap_test(
      data, TrendModel(1, 2), VariogramFamily::Exponential,
      KernelSpec{KernelFamily::MultiplicativeTriweight, 2},
      BandwidthMatrix::scalar(2, 0.8), WeightFunction::one(), q, 99, 11);
  CHECK_TRUE(j.at("t_n").get<double>() == direct.t_n);
  CHECK_TRUE(j.at("p_value").get<double>() == direct.p_value);
  CHECK_TRUE((first.exit_code == 2) == (direct.p_value <= 0.05));

  const RunResult second = run_cli(args);
  CHECK_TRUE(second.out == first.out);  // determinism under --seed
}

void test_perfect_fit_exit_zero() {
  using namespace spatialgof;
  std::vector<double> loc, z;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const double x = i / 9.0, y = j / 9.0;
      loc.push_back(x);
      loc.push_back(y);
      z.push_back(2.0 + x + y);
    }
  write_dataset_csv((scratch / "perfect.csv").string(),
                    SpatialDataset(2, loc, z));
  const RunResult r = run_cli("test --data " + (scratch / "perfect.csv").string() +
                              " --bandwidth 0.7 --B 99 --seed 3");
  CHECK_TRUE(r.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK_TRUE(j.at("t_n").get<double>() == 0.0);
  CHECK_TRUE(j.at("p_value").get<double>() == 1.0);
}

void test_rejection_exit_two() {
  using namespace spatialgof;
  spatialgof::ScenarioConfig cfg;
  cfg.grid_side = 12;
  cfg.sigma = 0.2;
  cfg.range = 0.1;
  cfg.c = 5.0;  // strong cubic deviation
  cfg.bandwidths = {spatialgof::BandwidthMatrix::scalar(2, 0.8)};
  cfg.seed = 5;
  const SpatialDataset data = generate_field(cfg, 1).dataset;
  write_dataset_csv((scratch / "alt.csv").string(), data);
  const RunResult r = run_cli("test --data " + (scratch / "alt.csv").string() +
                              " --bandwidth 0.8 --B 199 --seed 9");
  CHECK_TRUE(r.exit_code == 2);
}

void test_parse_error_exit_one() {
  {
    std::ofstream out(scratch / "bad.csv");
    out << "x,y,z\n0,0,1\n1,0,oops\n0,1,2\n1,1,3\n";
  }
  const RunResult r = run_cli("test --data " + (scratch / "bad.csv").string() +
                              " --bandwidth 0.8 --B 99 --seed 1");
  CHECK_TRUE(r.exit_code == 1);
  CHECK_TRUE(r.err.find("parse") != std::string::npos);
  CHECK_TRUE(r.err.find(":3") != std::string::npos);
}

void test_trace_csv() {
  using namespace spatialgof;
  const SpatialDataset data = make_null_dataset(7);
  const std::filesystem::path csv = scratch / "trace_in.csv";
  write_dataset_csv(csv.string(), data);
  const std::filesystem::path out = scratch / "trace.csv";
  const std::string args = "trace --data " + csv.string() +
                           " --bandwidth-grid 0.6:1.0:5,0.8:0.8:1 --B 49" +
                           " --seed 21 --out " + out.string();
  const RunResult r = run_cli(args);
  CHECK_TRUE(r.exit_code == 0);
  const std::string body = slurp(out);
  CHECK_TRUE(body.rfind("h1,h2,p_value,error\n", 0) == 0);
  int rows = -1;  // header
  for (char ch : body)
    if (ch == '\n') ++rows;
  CHECK_TRUE(rows == 5);
  const RunResult again = run_cli(args);
  CHECK_TRUE(slurp(out) == body);
}

void test_empty_grid_usage_error() {
  const RunResult r = run_cli("trace --data nowhere.csv --bandwidth-grid ,");
  CHECK_TRUE(r.exit_code == 1);
}

void test_variogram_command() {
  using namespace spatialgof;
  Rng rng(65);
  std::vector<double> loc, z;
  for (int i = 0; i < 120; ++i) {
    loc.push_back(rng.uniform01());
    loc.push_back(rng.uniform01());
    z.push_back(rng.normal());
  }
  write_dataset_csv((scratch / "noise.csv").string(),
                    SpatialDataset(2, loc, z));
  const std::filesystem::path out = scratch / "vario.csv";
  const RunResult r = run_cli("variogram --data " +
                              (scratch / "noise.csv").string() + " --out " +
                              out.string());
  CHECK_TRUE(r.exit_code == 0);
  const std::string body = slurp(out);
  CHECK_TRUE(body.rfind("lag,gamma,npairs,fit_exponential,fit_spherical,"
                        "fit_rational_quadratic\n",
                        0) == 0);
  const nlohmann::json summary = nlohmann::json::parse(r.out);
  // White noise: fitted curves must be nugget-dominated (flat near the
  // variance level 1).
  const double c0 = summary.at("exponential").at("nugget").get<double>();
  const double c1 = summary.at("exponential").at("partial_sill").get<double>();
  const double range = summary.at("exponential").at("range").get<double>();
  const double near_origin = c0 + c1 * (1.0 - std::exp(-0.05 / range));
  CHECK_TRUE(std::abs(near_origin - 1.0) < 0.35);
}

void test_simulate_command() {
  const std::filesystem::path cfg = scratch / "tiny.cfg";
  {
    std::ofstream out(cfg);
    out << "design = grid\nside = 10\ntrend = m1\nc = 0\nsigma = 0.4\n"
        << "a_e = 0.2\nbandwidths = 0.7,0.9\nreplicates = 6\nB = 39\n"
        << "seed = 100\nquad_points = 15\n";
  }
  const std::filesystem::path out = scratch / "sim.csv";
  const RunResult r =
      run_cli("simulate --config " + cfg.string() + " --out " + out.string());
  CHECK_TRUE(r.exit_code == 0);
  const std::string body = slurp(out);
  CHECK_TRUE(body.rfind("sigma,a_e,c,n,h1,h2,rejections,replicates,proportion\n",
                        0) == 0);
  int rows = -1;
  for (char ch : body)
    if (ch == '\n') ++rows;
  CHECK_TRUE(rows == 2);
  run_cli("simulate --config " + cfg.string() + " --out " + out.string());
  CHECK_TRUE(slurp(out) == body);

  const RunResult bad = run_cli("simulate --config " + cfg.string() +
                                "missing --out " + out.string());
  CHECK_TRUE(bad.exit_code == 1);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: cli_tests <cli-binary> <scratch-dir>\n";
    return 2;
  }
  cli_path = argv[1];
  scratch = argv[2];
  std::filesystem::create_directories(scratch);

  test_report_round_trip();
  test_perfect_fit_exit_zero();
  test_rejection_exit_two();
  test_parse_error_exit_one();
  test_trace_csv();
  test_empty_grid_usage_error();
  test_variogram_command();
  test_simulate_command();

  if (failures == 0) {
    std::cout << "cli_tests: all checks passed\n";
    return 0;
  }
  std::cerr << "cli_tests: " << failures << " check(s) failed\n";
  return 1;
}
