#ifndef SPATIALGOF_VARIOGRAPHY_HPP
#define SPATIALGOF_VARIOGRAPHY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spatialgof/errors.hpp"
#include "spatialgof/numerics.hpp"

namespace spatialgof {

enum class VariogramFamily { Exponential, Spherical, RationalQuadratic };

inline std::string variogram_family_name(VariogramFamily f) {
  switch (f) {
    case VariogramFamily::Exponential: return "exponential";
    case VariogramFamily::Spherical: return "spherical";
    default: return "rational-quadratic";
  }
}

/// Isotropic variogram model theta = (nugget c_0, partial sill c_1,
/// range a_e). Total sill sigma^2 = c_0 + c_1.
struct VariogramModel {
  VariogramFamily family = VariogramFamily::Exponential;
  double nugget = 0.0;        // c_0 >= 0
  double partial_sill = 1.0;  // c_1 >= 0
  double range = 1.0;         // a_e > 0

  double sill() const { return nugget + partial_sill; }
};

/// Correlation rho(h) of the spatially structured component.
inline double correlation(const VariogramModel& m, double h) {
  if (h < 0.0) throw DimensionMismatch("correlation: negative lag");
  if (h == 0.0) return 1.0;
  const double r = h / m.range;
  switch (m.family) {
    case VariogramFamily::Exponential:
      return std::exp(-r);
    case VariogramFamily::RationalQuadratic:
      return 1.0 / (1.0 + r * r);
    case VariogramFamily::Spherical:
      if (r >= 1.0) return 0.0;
      return 1.0 - 1.5 * r + 0.5 * r * r * r;
  }
  return 0.0;
}

/// Semivariogram gamma(h) = c_0 + c_1 (1 - rho(h)) for h > 0, gamma(0) = 0.
inline double semivariance(const VariogramModel& m, double h) {
  if (h == 0.0) return 0.0;
  return m.nugget + m.partial_sill * (1.0 - correlation(m, h));
}

/// Error covariance matrix: diagonal c_0 + c_1, off-diagonal
/// c_1 rho(||X_i - X_j||). Coincident distinct points keep the nugget
/// discontinuity: their covariance is c_1, not c_0 + c_1.
inline SymMatrix covariance_matrix(const VariogramModel& m,
                                   std::span<const double> locations,
                                   std::size_t dim) {
  if (dim == 0 || locations.size() % dim != 0)
    throw DimensionMismatch("covariance_matrix: bad locations shape");
  const std::size_t n = locations.size() / dim;
  SymMatrix sigma(n);
  for (std::size_t i = 0; i < n; ++i) {
    sigma.at(i, i) = m.sill();
    for (std::size_t j = 0; j < i; ++j) {
      double q = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = locations[i * dim + k] - locations[j * dim + k];
        q += d * d;
      }
      const double value = m.partial_sill * correlation(m, std::sqrt(q));
      sigma.at(i, j) = value;
      sigma.at(j, i) = value;
    }
  }
  return sigma;
}

/// Binned Matheron estimator of the semivariogram.
struct EmpiricalVariogram {
  std::vector<double> bin_centers;  // strictly increasing lags
  std::vector<double> gamma_hat;    // semivariance estimates
  std::vector<std::size_t> pair_counts;

  std::size_t size() const { return bin_centers.size(); }
};

/// Matheron estimator on equal-width bins over (0, max_lag]; empty bins are
/// dropped. Pairs at exactly zero distance carry no increment information
/// and are skipped.
inline EmpiricalVariogram empirical_semivariogram(
    std::span<const double> locations, std::size_t dim,
    std::span<const double> residuals, std::size_t n_bins, double max_lag) {
  if (dim == 0 || locations.size() % dim != 0)
    throw DimensionMismatch("empirical_semivariogram: bad locations shape");
  const std::size_t n = locations.size() / dim;
  if (residuals.size() != n)
    throw DimensionMismatch("empirical_semivariogram: residuals size mismatch");
  if (n < 2 || n_bins < 2 || !(max_lag > 0.0))
    throw DimensionMismatch("empirical_semivariogram: need n>=2, bins>=2, max_lag>0");

  std::vector<double> sums(n_bins, 0.0);
  std::vector<std::size_t> counts(n_bins, 0);
  const double width = max_lag / static_cast<double>(n_bins);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double q = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = locations[i * dim + k] - locations[j * dim + k];
        q += d * d;
      }
      const double dist = std::sqrt(q);
      if (dist <= 0.0 || dist > max_lag) continue;
      auto bin = static_cast<std::size_t>(dist / width);
      if (bin >= n_bins) bin = n_bins - 1;
      const double inc = residuals[i] - residuals[j];
      sums[bin] += inc * inc;
      ++counts[bin];
    }

  EmpiricalVariogram emp;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (counts[b] == 0) continue;
    emp.bin_centers.push_back((static_cast<double>(b) + 0.5) * width);
    emp.gamma_hat.push_back(sums[b] / (2.0 * static_cast<double>(counts[b])));
    emp.pair_counts.push_back(counts[b]);
  }
  if (emp.bin_centers.empty())
    throw NoPairsInRange("empirical_semivariogram: no pairs within max_lag " +
                         std::to_string(max_lag));
  return emp;
}

struct VariogramFitResult {
  VariogramModel model;
  double objective = 0.0;
  bool converged = false;
};

namespace detail {

/// Cressie weighted least squares criterion in its relative form,
/// sum_j N_j (gamma_hat_j / gamma_theta(h_j) - 1)^2.
inline double cressie_objective(const EmpiricalVariogram& emp,
                                const VariogramModel& m, double denom_floor) {
  double obj = 0.0;
  for (std::size_t j = 0; j < emp.size(); ++j) {
    const double g = std::max(semivariance(m, emp.bin_centers[j]), denom_floor);
    const double r = emp.gamma_hat[j] / g - 1.0;
    obj += static_cast<double>(emp.pair_counts[j]) * r * r;
  }
  return obj;
}

}  // namespace detail

/// Fits theta = (c_0, c_1, a_e) by Cressie weighted least squares using
/// Nelder-Mead from five deterministic starts spread over the bound box
/// (plus any caller-supplied starts); the best objective wins.
inline VariogramFitResult fit_variogram_wls(
    const EmpiricalVariogram& emp, VariogramFamily family,
    std::span<const VariogramModel> extra_starts = {}) {
  if (emp.size() < 3)
    throw VariogramFitFailed("fit_variogram_wls: need at least 3 bins, got " +
                             std::to_string(emp.size()));
  for (std::size_t j = 1; j < emp.size(); ++j)
    if (!(emp.bin_centers[j] > emp.bin_centers[j - 1]))
      throw VariogramFitFailed("fit_variogram_wls: bin centers must increase");

  const double lag_min = emp.bin_centers.front();
  const double lag_max = emp.bin_centers.back();
  double g_max = 0.0, g_mean = 0.0;
  for (double g : emp.gamma_hat) {
    g_max = std::max(g_max, g);
    g_mean += g;
  }
  g_mean /= static_cast<double>(emp.size());
  double g_var = 0.0;
  for (double g : emp.gamma_hat) g_var += (g - g_mean) * (g - g_mean);
  g_var /= static_cast<double>(emp.size());
  const double scale = std::max(g_max, 1e-300);

  const double c1_lo = std::max(1e-8 * g_var, 1e-12 * scale);
  const std::vector<double> lower = {0.0, c1_lo, lag_min / 10.0};
  const std::vector<double> upper = {4.0 * scale, 4.0 * scale, 10.0 * lag_max};
  const double denom_floor = 1e-10 * scale;

  auto objective = [&](std::span<const double> t) {
    VariogramModel m{family, t[0], t[1], t[2]};
    return detail::cressie_objective(emp, m, denom_floor);
  };

  std::vector<std::vector<double>> starts = {
      {0.0, g_mean, 0.25 * lag_max},
      {0.0, g_max, 0.05 * lag_max},
      {0.5 * g_mean, 0.5 * g_mean, 0.5 * lag_max},
      {0.1 * g_max, 0.9 * g_max, 0.1 * lag_max},
      {0.0, 0.5 * g_max, 2.0 * lag_max},
  };
  for (const auto& s : extra_starts)
    starts.push_back({s.nugget, s.partial_sill, s.range});

  VariogramFitResult best;
  bool have_best = false;
  bool any_converged = false;
  for (auto& start : starts) {
    for (std::size_t j = 0; j < 3; ++j)
      start[j] = std::clamp(start[j], lower[j], upper[j]);
    const NelderMeadResult r =
        nelder_mead(objective, start, lower, upper, 1e-10, 2000);
    any_converged = any_converged || r.converged;
    if (!have_best || r.fval < best.objective) {
      best.model = VariogramModel{family, r.x[0], r.x[1], r.x[2]};
      best.objective = r.fval;
      best.converged = r.converged;
      have_best = true;
    }
  }
  if (!any_converged)
    throw VariogramFitFailed(
        "fit_variogram_wls: optimizer failed to converge from every start");
  return best;
}

inline VariogramFitResult fit_variogram_wls(const EmpiricalVariogram& emp,
                                            VariogramFamily family,
                                            const VariogramModel& start) {
  return fit_variogram_wls(emp, family,
                           std::span<const VariogramModel>(&start, 1));
}

}  // namespace spatialgof

#endif  // SPATIALGOF_VARIOGRAPHY_HPP
