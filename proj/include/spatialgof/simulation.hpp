#ifndef SPATIALGOF_SIMULATION_HPP
#define SPATIALGOF_SIMULATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spatialgof/dataset.hpp"
#include "spatialgof/errors.hpp"
#include "spatialgof/goftest.hpp"
#include "spatialgof/kernels.hpp"
#include "spatialgof/numerics.hpp"
#include "spatialgof/parallel.hpp"
#include "spatialgof/rng.hpp"
#include "spatialgof/trend.hpp"
#include "spatialgof/variography.hpp"

namespace spatialgof {

enum class DesignType { RegularGrid, UniformRandom };
enum class TrendKind { M1, M2 };  // 2+x1+x2+c*x1^3 and 3+2*x1+x2+c*x1^3
enum class CorrelationKind { ExponentialFixed, ExponentialShrinking };
enum class GridConvention { InclusiveEndpoints, CellCenters };

/// One Monte Carlo scenario: design, mean surface, error covariance,
/// bandwidth grid and test settings. Defaults are the reduced scale
/// (R = 200 replicates, B = 200 bootstrap draws).
struct ScenarioConfig {
  DesignType design = DesignType::RegularGrid;
  std::size_t grid_side = 15;
  std::size_t n_random = 225;
  GridConvention grid_convention = GridConvention::InclusiveEndpoints;

  TrendKind trend = TrendKind::M1;
  double c = 0.0;          // cubic deviation amplitude; 0 is the null
  double sigma = 0.4;      // point standard deviation
  double range = 0.2;      // a_e
  double nugget_frac = 0;  // nugget as a fraction of sigma^2
  CorrelationKind correlation = CorrelationKind::ExponentialFixed;
  double lambda = 0.0;     // shrinking-correlation rate exp(-lambda*n*dist)

  std::vector<BandwidthMatrix> bandwidths;
  double alpha = 0.05;
  int replicates = 200;
  int bootstrap_B = 200;
  std::uint64_t seed = 1;
  int quad_points = 30;
  std::size_t trend_degree = 1;  // degree of the null polynomial surface
  VariogramFamily fit_family = VariogramFamily::Exponential;
  KernelFamily kernel = KernelFamily::MultiplicativeTriweight;
  int threads = 0;
  bool refit_variogram = false;

  std::size_t sample_size() const {
    return design == DesignType::RegularGrid ? grid_side * grid_side : n_random;
  }

  void validate() const {
    if (sample_size() < 25) throw ConfigError("scenario: sample size below 25");
    if (!(sigma > 0.0)) throw ConfigError("scenario: sigma must be positive");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ConfigError("scenario: alpha must lie in (0,1)");
    if (nugget_frac < 0.0 || nugget_frac >= 1.0)
      throw ConfigError("scenario: nugget_frac must lie in [0,1)");
    if (correlation == CorrelationKind::ExponentialFixed && !(range > 0.0))
      throw ConfigError("scenario: range must be positive");
    if (correlation == CorrelationKind::ExponentialShrinking && !(lambda > 0.0))
      throw ConfigError("scenario: lambda must be positive");
    if (replicates < 1) throw ConfigError("scenario: replicates must be >= 1");
    if (bootstrap_B < 19) throw ConfigError("scenario: B must be >= 19");
    if (bandwidths.empty()) throw ConfigError("scenario: empty bandwidth grid");
    if (quad_points < 2) throw ConfigError("scenario: quad_points must be >= 2");
  }
};

inline double trend_value(TrendKind kind, double c, double x1, double x2) {
  return kind == TrendKind::M1 ? 2.0 + x1 + x2 + c * x1 * x1 * x1
                               : 3.0 + 2.0 * x1 + x2 + c * x1 * x1 * x1;
}

/// Linear-part coefficients (intercept, x1, x2) under the null c = 0.
inline std::vector<double> true_beta(TrendKind kind) {
  return kind == TrendKind::M1 ? std::vector<double>{2.0, 1.0, 1.0}
                               : std::vector<double>{3.0, 2.0, 1.0};
}

/// Error covariance of the scenario as a variogram model. The shrinking
/// family exp(-lambda n dist) is an exponential model with effective range
/// 1/(lambda n).
inline VariogramModel scenario_variogram(const ScenarioConfig& cfg) {
  if (cfg.correlation == CorrelationKind::ExponentialShrinking) {
    const double n = static_cast<double>(cfg.sample_size());
    return VariogramModel{VariogramFamily::Exponential, 0.0,
                          cfg.sigma * cfg.sigma, 1.0 / (cfg.lambda * n)};
  }
  const double total = cfg.sigma * cfg.sigma;
  const double nugget = cfg.nugget_frac * total;
  return VariogramModel{VariogramFamily::Exponential, nugget, total - nugget,
                        cfg.range};
}

/// Grid coordinates on [0,1]: inclusive endpoints i/(side-1), or cell
/// centers (i+0.5)/side.
inline std::vector<double> grid_locations(std::size_t side, GridConvention gc) {
  std::vector<double> locations;
  locations.reserve(side * side * 2);
  for (std::size_t i = 0; i < side; ++i)
    for (std::size_t j = 0; j < side; ++j) {
      double x, y;
      if (gc == GridConvention::InclusiveEndpoints) {
        x = static_cast<double>(i) / static_cast<double>(side - 1);
        y = static_cast<double>(j) / static_cast<double>(side - 1);
      } else {
        x = (static_cast<double>(i) + 0.5) / static_cast<double>(side);
        y = (static_cast<double>(j) + 0.5) / static_cast<double>(side);
      }
      locations.push_back(x);
      locations.push_back(y);
    }
  return locations;
}

struct FieldSample {
  SpatialDataset dataset;
  std::vector<double> beta0;  // linear-part coefficients under the null
  std::size_t replicate_index = 0;
};

/// Gaussian random field generator: errors are L z with L the Cholesky
/// factor of the scenario covariance and z i.i.d. standard normals from
/// the replicate's derived stream. For regular grids the factor is shared
/// across replicates.
///
/// Stream layout per replicate r, from Rng(derive_seed(derive_seed(seed, r), 0)):
/// random designs first draw 2n uniforms (x then y per point), then all
/// designs draw n normals.
class FieldGenerator {
 public:
  explicit FieldGenerator(const ScenarioConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.design == DesignType::RegularGrid) {
      grid_points_ = grid_locations(cfg_.grid_side, cfg_.grid_convention);
      grid_chol_ = cholesky(covariance_matrix(scenario_variogram(cfg_),
                                              grid_points_, 2));
    }
  }

  const ScenarioConfig& config() const { return cfg_; }

  FieldSample generate(std::size_t replicate_index) const {
    const std::uint64_t rep_seed = derive_seed(cfg_.seed, replicate_index);
    Rng rng(derive_seed(rep_seed, 0));
    const std::size_t n = cfg_.sample_size();

    std::vector<double> locations;
    const LowerTriangular* chol = nullptr;
    LowerTriangular local_chol;
    if (cfg_.design == DesignType::RegularGrid) {
      locations = grid_points_;
      chol = &grid_chol_;
    } else {
      locations.resize(2 * n);
      for (std::size_t i = 0; i < n; ++i) {
        locations[2 * i] = rng.uniform01();
        locations[2 * i + 1] = rng.uniform01();
      }
      local_chol =
          cholesky(covariance_matrix(scenario_variogram(cfg_), locations, 2));
      chol = &local_chol;
    }

    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = rng.normal();

    std::vector<double> responses(n);
    for (std::size_t i = 0; i < n; ++i) {
      double eps = 0.0;
      for (std::size_t k = 0; k <= i; ++k) eps += chol->at(i, k) * z[k];
      responses[i] = trend_value(cfg_.trend, cfg_.c, locations[2 * i],
                                 locations[2 * i + 1]) +
                     eps;
    }
    return FieldSample{SpatialDataset(2, std::move(locations),
                                      std::move(responses)),
                       true_beta(cfg_.trend), replicate_index};
  }

 private:
  ScenarioConfig cfg_;
  std::vector<double> grid_points_;
  LowerTriangular grid_chol_;
};

inline FieldSample generate_field(const ScenarioConfig& cfg,
                                  std::size_t replicate_index) {
  return FieldGenerator(cfg).generate(replicate_index);
}

struct CovarianceCheckRow {
  double lag = 0.0;
  double analytic = 0.0;
  double empirical = 0.0;
  double std_error = 0.0;
};

struct CovarianceCheckResult {
  std::vector<CovarianceCheckRow> rows;
  double max_abs_deviation = 0.0;
  double max_se_ratio = 0.0;  // worst |empirical-analytic| / std_error
};

/// Monte Carlo validation of the generator: empirical covariances of five
/// fixed grid-point pairs against the analytic model. Standard errors use
/// Var(eps_a eps_b) = sigma_a^2 sigma_b^2 + cov_ab^2 for Gaussian errors.
inline CovarianceCheckResult empirical_covariance_check(
    const ScenarioConfig& cfg, int R) {
  if (cfg.design != DesignType::RegularGrid)
    throw ConfigError(
        "empirical_covariance_check: requires a regular grid design");
  if (R < 200)
    throw ConfigError("empirical_covariance_check: need at least 200 replicates");

  const std::size_t side = cfg.grid_side;
  const std::size_t ref = (side / 2) * side + side / 2;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t k = 0; k < 5 && side / 2 + k < side; ++k)
    pairs.emplace_back(ref, ref + k);

  const FieldGenerator gen(cfg);
  const VariogramModel model = scenario_variogram(cfg);
  const std::vector<double> grid = grid_locations(side, cfg.grid_convention);

  std::vector<std::vector<double>> products(pairs.size(),
                                            std::vector<double>(R, 0.0));
  parallel_for_indexed(R, cfg.threads, [&](std::size_t r) {
    const FieldSample fs = gen.generate(r);
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
      const auto [a, b] = pairs[pi];
      const double ea =
          fs.dataset.responses()[a] -
          trend_value(cfg.trend, cfg.c, grid[2 * a], grid[2 * a + 1]);
      const double eb =
          fs.dataset.responses()[b] -
          trend_value(cfg.trend, cfg.c, grid[2 * b], grid[2 * b + 1]);
      products[pi][r] = ea * eb;
    }
  });

  CovarianceCheckResult out;
  const double sigma2 = cfg.sigma * cfg.sigma;
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    const auto [a, b] = pairs[pi];
    double lag = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
      const double d = grid[2 * a + k] - grid[2 * b + k];
      lag += d * d;
    }
    lag = std::sqrt(lag);
    const double analytic =
        a == b ? model.sill() : model.partial_sill * correlation(model, lag);
    double mean = 0.0;
    for (double v : products[pi]) mean += v;
    mean /= static_cast<double>(R);
    const double var_product = sigma2 * sigma2 + analytic * analytic;
    const double se = std::sqrt(var_product / static_cast<double>(R));
    out.rows.push_back({lag, analytic, mean, se});
    const double dev = std::abs(mean - analytic);
    out.max_abs_deviation = std::max(out.max_abs_deviation, dev);
    if (se > 0.0) out.max_se_ratio = std::max(out.max_se_ratio, dev / se);
  }
  return out;
}

struct ScenarioRow {
  BandwidthMatrix bandwidth;
  int rejections = 0;
  int valid_replicates = 0;
  double proportion = 0.0;
};

struct ScenarioResult {
  ScenarioConfig config;
  std::vector<ScenarioRow> rows;                       // one per bandwidth
  std::vector<std::pair<std::size_t, std::string>> failures;  // replicate, cause
};

/// Rejection proportions over R replicates: generate a field, run the
/// bootstrap test at every bandwidth, count p <= alpha. Replicate r tests
/// bandwidth i with seed derive_seed(derive_seed(seed, r), 1 + i).
/// Aggregation is index-ordered, so the result does not depend on the
/// worker count. Failed replicates are excluded from the denominator and
/// reported; if they exceed 2% of R the affected proportions are NaN.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const FieldGenerator gen(cfg);
  const QuadratureGrid q = QuadratureGrid::unit_square(cfg.quad_points);
  const WeightFunction w = WeightFunction::one();
  const KernelSpec kernel{cfg.kernel, 2};
  const TrendModel model(cfg.trend_degree, 2);
  const std::size_t R = cfg.replicates;
  const std::size_t nh = cfg.bandwidths.size();

  // -1 failed, 0 accept, 1 reject; row-major R x nh
  std::vector<signed char> outcome(R * nh, -1);
  std::vector<std::string> messages(R);
  GofOptions options;
  options.iter = IterConfig{};
  options.refit_variogram = cfg.refit_variogram;
  options.threads = 1;  // replicates are the parallel unit

  parallel_for_indexed(R, cfg.threads, [&](std::size_t r) {
    FieldSample fs = gen.generate(r);
    const std::uint64_t rep_seed = derive_seed(cfg.seed, r);
    try {
      const GofPipeline pipeline(std::move(fs.dataset), model, cfg.fit_family,
                                 options);
      for (std::size_t i = 0; i < nh; ++i) {
        try {
          const TestReport report =
              pipeline.bootstrap_test(kernel, cfg.bandwidths[i], w, q,
                                      cfg.bootstrap_B, derive_seed(rep_seed, 1 + i));
          outcome[r * nh + i] = report.p_value <= cfg.alpha ? 1 : 0;
        } catch (const Error& e) {
          if (messages[r].empty()) messages[r] = e.what();
        }
      }
    } catch (const Error& e) {
      messages[r] = e.what();
    }
  });

  ScenarioResult result;
  result.config = cfg;
  for (std::size_t r = 0; r < R; ++r)
    if (!messages[r].empty()) result.failures.emplace_back(r, messages[r]);
  for (std::size_t i = 0; i < nh; ++i) {
    ScenarioRow row;
    row.bandwidth = cfg.bandwidths[i];
    for (std::size_t r = 0; r < R; ++r) {
      const signed char o = outcome[r * nh + i];
      if (o < 0) continue;
      ++row.valid_replicates;
      row.rejections += o;
    }
    const auto failed = static_cast<double>(R - row.valid_replicates);
    row.proportion =
        (failed < 0.02 * static_cast<double>(R) && row.valid_replicates > 0)
            ? static_cast<double>(row.rejections) / row.valid_replicates
            : std::numeric_limits<double>::quiet_NaN();
    result.rows.push_back(std::move(row));
  }
  return result;
}

struct AsymptoticStudyConfig {
  double sigma2 = 0.4;
  double lambda = 0.0005;
  std::uint64_t seed = 1;
  int quad_points = 30;
  int threads = 0;
  /// Scalar bandwidth h = n^exponent; slow enough that n|H| grows without
  /// the bandwidth collapsing at the sizes actually run.
  double bandwidth_exponent = -0.125;
  IterConfig iter;
  VariogramFamily fit_family = VariogramFamily::Exponential;
};

struct AsymptoticStudyResult {
  std::size_t n = 0;
  double bandwidth = 0.0;
  AsymptoticConstants constants;
  std::vector<double> standardized;  // replicate order
  std::vector<std::pair<std::size_t, std::string>> failures;
};

/// Sampling distribution of the standardized statistic under shrinking
/// correlation exp(-lambda n dist) with uniform random design on the unit
/// square and a Gaussian kernel. The design density and sigma^2 enter the
/// constants as known quantities and rho_c = 1/lambda.
inline std::vector<AsymptoticStudyResult> asymptotic_study(
    const AsymptoticStudyConfig& cfg, std::span<const std::size_t> n_list,
    int R) {
  if (R < 1) throw ConfigError("asymptotic_study: need at least one replicate");
  std::vector<AsymptoticStudyResult> results;
  const WeightFunction w = WeightFunction::one();
  const KernelSpec kernel{KernelFamily::Gaussian, 2};
  const TrendModel model(1, 2);

  for (const std::size_t n : n_list) {
    ScenarioConfig scen;
    scen.design = DesignType::UniformRandom;
    scen.n_random = n;
    scen.trend = TrendKind::M1;
    scen.c = 0.0;
    scen.sigma = std::sqrt(cfg.sigma2);
    scen.correlation = CorrelationKind::ExponentialShrinking;
    scen.lambda = cfg.lambda;
    scen.bandwidths = {BandwidthMatrix::scalar(
        2, std::pow(static_cast<double>(n), cfg.bandwidth_exponent))};
    scen.replicates = R;
    scen.seed = cfg.seed;
    scen.quad_points = cfg.quad_points;
    scen.fit_family = cfg.fit_family;
    scen.kernel = KernelFamily::Gaussian;

    const QuadratureGrid q = QuadratureGrid::unit_square(cfg.quad_points);
    AsymptoticInputs inputs;
    inputs.sigma2 = cfg.sigma2;
    inputs.rho_c = 1.0 / cfg.lambda;
    inputs.density = DesignDensity::UniformOnD;

    AsymptoticStudyResult res;
    res.n = n;
    res.bandwidth = scen.bandwidths[0][0];
    res.constants = asymptotic_constants(inputs, kernel, scen.bandwidths[0], w, q);

    const FieldGenerator gen(scen);
    std::vector<double> sample(R,
                               std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> messages(R);
    GofOptions options;
    options.iter = cfg.iter;
    options.threads = 1;
    parallel_for_indexed(R, cfg.threads, [&](std::size_t r) {
      try {
        FieldSample fs = gen.generate(r);
        const GofPipeline pipeline(std::move(fs.dataset), model,
                                   cfg.fit_family, options);
        const double t_n =
            pipeline.statistic(kernel, scen.bandwidths[0], w, q);
        sample[r] = standardized_statistic(t_n, res.constants);
      } catch (const Error& e) {
        messages[r] = e.what();
      }
    });
    for (std::size_t r = 0; r < static_cast<std::size_t>(R); ++r) {
      if (messages[r].empty())
        res.standardized.push_back(sample[r]);
      else
        res.failures.emplace_back(r, messages[r]);
    }
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace spatialgof

#endif  // SPATIALGOF_SIMULATION_HPP
