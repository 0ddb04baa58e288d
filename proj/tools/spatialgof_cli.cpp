// Command-line front end: goodness-of-fit tests for parametric trend
// surfaces under spatially correlated errors.
//
// Exit codes: 0 = no rejection, 2 = rejection at the requested level,
// 1 = error (message names the failing stage).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spatialgof.hpp"

namespace {

using namespace spatialgof;

std::uint64_t resolve_seed(std::optional<std::uint64_t> seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t s =
      (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
  std::cerr << "seed: " << s << "\n";
  return s;
}

VariogramFamily parse_family(const std::string& name) {
  if (name == "exponential") return VariogramFamily::Exponential;
  if (name == "spherical") return VariogramFamily::Spherical;
  if (name == "rational-quadratic") return VariogramFamily::RationalQuadratic;
  throw ConfigError("unknown variogram family '" + name + "'");
}

KernelFamily parse_kernel(const std::string& name) {
  if (name == "triweight") return KernelFamily::MultiplicativeTriweight;
  if (name == "gaussian") return KernelFamily::Gaussian;
  throw ConfigError("unknown kernel '" + name + "'");
}

BandwidthMatrix parse_bandwidth(const std::string& spec) {
  std::stringstream ss(spec);
  std::string item;
  std::vector<double> h;
  while (std::getline(ss, item, ','))
    h.push_back(detail::parse_double(detail::trim(item), "--bandwidth"));
  if (h.size() == 1) return BandwidthMatrix::scalar(2, h[0]);
  if (h.size() == 2) return BandwidthMatrix({h[0], h[1]});
  throw ConfigError("--bandwidth expects h or h1,h2");
}

// "h1min:h1max:steps,h2min:h2max:steps"; a singleton axis may be "h" alone.
std::vector<BandwidthMatrix> parse_bandwidth_grid(const std::string& spec) {
  const std::size_t comma = spec.find(',');
  if (comma == std::string::npos)
    throw ConfigError("--bandwidth-grid expects two axis specs separated by ','");
  auto parse_axis = [](const std::string& axis) {
    std::vector<double> values;
    std::stringstream ss(axis);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, ':')) parts.push_back(detail::trim(part));
    if (parts.size() == 1) {
      values.push_back(detail::parse_double(parts[0], "--bandwidth-grid"));
      return values;
    }
    if (parts.size() != 3)
      throw ConfigError("--bandwidth-grid axis must be min:max:steps");
    const double lo = detail::parse_double(parts[0], "--bandwidth-grid");
    const double hi = detail::parse_double(parts[1], "--bandwidth-grid");
    const int steps = static_cast<int>(
        detail::parse_double(parts[2], "--bandwidth-grid"));
    if (steps < 1 || (steps > 1 && !(hi > lo)))
      throw ConfigError("--bandwidth-grid axis must have steps>=1 and max>min");
    for (int i = 0; i < steps; ++i)
      values.push_back(steps == 1 ? lo
                                  : lo + (hi - lo) * static_cast<double>(i) /
                                             static_cast<double>(steps - 1));
    return values;
  };
  const std::vector<double> h1 = parse_axis(spec.substr(0, comma));
  const std::vector<double> h2 = parse_axis(spec.substr(comma + 1));
  std::vector<BandwidthMatrix> grid;
  for (const double a : h1)
    for (const double b : h2) grid.push_back(BandwidthMatrix({a, b}));
  if (grid.empty()) throw ConfigError("--bandwidth-grid produced no bandwidths");
  return grid;
}

WeightFunction parse_weight(const std::string& spec) {
  if (spec == "one") return WeightFunction::one();
  if (spec.rfind("box:", 0) == 0) {
    std::stringstream ss(spec.substr(4));
    std::string item;
    std::vector<double> v;
    while (std::getline(ss, item, ','))
      v.push_back(detail::parse_double(detail::trim(item), "--weight"));
    if (v.size() != 4)
      throw ConfigError("--weight box expects box:x0,x1,y0,y1");
    return WeightFunction::indicator_box({v[0], v[2]}, {v[1], v[3]});
  }
  throw ConfigError("--weight must be 'one' or 'box:x0,x1,y0,y1'");
}

void write_text(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw ParseError(out_path + ": cannot open for writing");
  out << text;
}

/// Maps library errors onto the stage naming promised by the interface.
int fail(const std::exception& e) {
  std::string stage = "error";
  if (dynamic_cast<const ParseError*>(&e)) stage = "parse";
  else if (dynamic_cast<const ConfigError*>(&e)) stage = "config";
  else if (dynamic_cast<const DegenerateDesign*>(&e) ||
           dynamic_cast<const VariogramFitFailed*>(&e) ||
           dynamic_cast<const NoPairsInRange*>(&e))
    stage = "fit";
  else if (dynamic_cast<const NotPositiveDefinite*>(&e)) stage = "cholesky";
  else if (dynamic_cast<const InsufficientLocalData*>(&e)) stage = "quadrature";
  std::cerr << stage << ": " << e.what() << "\n";
  return 1;
}

struct CommonTestArgs {
  std::string data_path;
  std::size_t trend_degree = 1;
  std::string family = "exponential";
  std::string kernel = "triweight";
  std::string weight = "one";
  int B = 500;
  double alpha = 0.05;
  std::optional<std::uint64_t> seed;
  int quad_points = 30;
  std::string out_path;
  int threads = 0;
  bool refit_variogram = false;
  int passes = 1;
};

void add_common(CLI::App* cmd, CommonTestArgs& args) {
  cmd->add_option("--data", args.data_path, "dataset CSV with columns x,y,z")
      ->required();
  cmd->add_option("--trend-degree", args.trend_degree,
                  "polynomial degree of the null trend surface");
  cmd->add_option("--variogram", args.family,
                  "exponential|spherical|rational-quadratic");
  cmd->add_option("--kernel", args.kernel, "triweight|gaussian");
  cmd->add_option("--weight", args.weight, "one | box:x0,x1,y0,y1");
  cmd->add_option("--B", args.B, "bootstrap replicates");
  cmd->add_option("--alpha", args.alpha, "significance level");
  cmd->add_option("--seed", args.seed, "RNG seed (omitted: drawn and printed)");
  cmd->add_option("--quad-points", args.quad_points,
                  "quadrature points per axis");
  cmd->add_option("--out", args.out_path, "output path (default stdout)");
  cmd->add_option("--threads", args.threads,
                  "worker threads (0 = hardware; capped by SPATIAL_GOF_THREADS)");
  cmd->add_flag("--refit-variogram", args.refit_variogram,
                "refit the variogram inside each bootstrap replicate");
  cmd->add_option("--passes", args.passes,
                  "iterative least squares passes (default 1)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Goodness-of-fit test for parametric trend surfaces with spatially "
      "correlated errors"};
  app.require_subcommand(1);

  CommonTestArgs targs;
  std::string bandwidth_spec;
  auto* cmd_test = app.add_subcommand(
      "test", "bootstrap-calibrated test at one bandwidth (JSON report)");
  add_common(cmd_test, targs);
  cmd_test->add_option("--bandwidth", bandwidth_spec, "h or h1,h2")->required();

  CommonTestArgs gargs;
  std::string grid_spec;
  auto* cmd_trace = app.add_subcommand(
      "trace", "significance trace over a bandwidth grid (CSV)");
  add_common(cmd_trace, gargs);
  cmd_trace
      ->add_option("--bandwidth-grid", grid_spec,
                   "h1min:h1max:steps,h2min:h2max:steps")
      ->required();

  std::string vdata, vout;
  std::size_t vdegree = 1;
  std::size_t vbins = 13;
  double vmax_lag = 0.0;
  auto* cmd_vario = app.add_subcommand(
      "variogram", "residual semivariogram and per-family WLS fits (CSV)");
  cmd_vario->add_option("--data", vdata, "dataset CSV")->required();
  cmd_vario->add_option("--trend-degree", vdegree, "trend degree for residuals");
  cmd_vario->add_option("--bins", vbins, "number of lag bins");
  cmd_vario->add_option("--max-lag", vmax_lag,
                        "maximum lag (default: half the max distance)");
  cmd_vario->add_option("--out", vout, "output CSV path (default stdout)");

  std::string cfg_path, sout;
  auto* cmd_sim = app.add_subcommand(
      "simulate", "rejection-proportion study from a config file (CSV)");
  cmd_sim->add_option("--config", cfg_path, "scenario config file")->required();
  cmd_sim->add_option("--out", sout, "output CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_test || *cmd_trace) {
      CommonTestArgs& args = *cmd_test ? targs : gargs;
      const DatasetReadResult read = read_dataset_csv(args.data_path);
      for (const auto& warning : read.warnings)
        std::cerr << "warning: " << warning << "\n";
      const std::uint64_t seed = resolve_seed(args.seed);
      const TrendModel model(args.trend_degree, 2);
      const KernelSpec kernel{parse_kernel(args.kernel), 2};
      const WeightFunction w = parse_weight(args.weight);
      const QuadratureGrid q =
          QuadratureGrid::bounding_box(read.dataset, args.quad_points);
      GofOptions options;
      options.iter.passes = args.passes;
      options.refit_variogram = args.refit_variogram;
      options.threads = args.threads;

      if (*cmd_test) {
        const TestReport report =
            bootstrap_test(read.dataset, model, parse_family(args.family),
                           kernel, parse_bandwidth(bandwidth_spec), w, q,
                           args.B, seed, options);
        write_text(args.out_path,
                   report_to_json(report, args.alpha, seed).dump(2) + "\n");
        return report.p_value <= args.alpha ? 2 : 0;
      }

      const std::vector<BandwidthMatrix> grid = parse_bandwidth_grid(grid_spec);
      const std::vector<TraceEntry> trace = significance_trace(
          read.dataset, model, parse_family(args.family), kernel, grid, w, q,
          args.B, seed, options);
      std::ostringstream csv;
      write_trace_csv(csv, trace);
      write_text(args.out_path, csv.str());
      return 0;
    }

    if (*cmd_vario) {
      const DatasetReadResult read = read_dataset_csv(vdata);
      for (const auto& warning : read.warnings)
        std::cerr << "warning: " << warning << "\n";
      const TrendModel model(vdegree, 2);
      const TrendCoefficients beta = ols_fit(model, read.dataset);
      const std::vector<double> fitted =
          beta.evaluate_at(read.dataset.locations());
      std::vector<double> resid(read.dataset.n());
      for (std::size_t i = 0; i < resid.size(); ++i)
        resid[i] = read.dataset.responses()[i] - fitted[i];
      const double max_lag =
          vmax_lag > 0.0 ? vmax_lag : default_max_lag(read.dataset);
      const EmpiricalVariogram emp = empirical_semivariogram(
          read.dataset.locations(), read.dataset.dim(), resid, vbins, max_lag);

      std::vector<std::pair<std::string, VariogramModel>> fits;
      nlohmann::json summary;
      for (const VariogramFamily family :
           {VariogramFamily::Exponential, VariogramFamily::Spherical,
            VariogramFamily::RationalQuadratic}) {
        const VariogramFitResult fit = fit_variogram_wls(emp, family);
        const std::string name = variogram_family_name(family);
        fits.emplace_back(name, fit.model);
        summary[name] = {{"nugget", fit.model.nugget},
                         {"partial_sill", fit.model.partial_sill},
                         {"range", fit.model.range},
                         {"objective", fit.objective},
                         {"converged", fit.converged}};
      }
      std::ostringstream csv;
      write_variogram_fits_csv(csv, emp, fits);
      write_text(vout, csv.str());
      if (!vout.empty() && vout != "-") std::cout << summary.dump(2) << "\n";
      else std::cerr << summary.dump(2) << "\n";
      return 0;
    }

    if (*cmd_sim) {
      const ScenarioConfig cfg = parse_scenario_config(cfg_path);
      const ScenarioResult result = run_scenario(cfg);
      std::ostringstream csv;
      write_scenario_csv(csv, result);
      write_text(sout, csv.str());
      std::cerr << "scenario: n=" << cfg.sample_size()
                << " replicates=" << cfg.replicates << " B=" << cfg.bootstrap_B
                << " failures=" << result.failures.size() << "\n";
      for (const auto& [r, msg] : result.failures)
        std::cerr << "replicate " << r << ": " << msg << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    return fail(e);
  }
  return 1;
}
