#ifndef SPATIALGOF_SMOOTHING_HPP
#define SPATIALGOF_SMOOTHING_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spatialgof/dataset.hpp"
#include "spatialgof/errors.hpp"
#include "spatialgof/kernels.hpp"
#include "spatialgof/numerics.hpp"

namespace spatialgof {

/// Local linear smoother weight row at x: the n-vector w(x) with
/// estimate(x) = w(x) . responses. Both the nonparametric fit and the
/// smoothed parametric fit apply this identical row, which is what makes
/// the test statistic exactly zero under a perfect parametric fit.
///
/// Solves the (d+1)x(d+1) weighted normal equations centered at x; the
/// first row of the inverse applied to the kernel-weighted design gives
/// w_i = K_H(X_i - x) * (s_0 + s' (X_i - x)).
inline std::vector<double> smoother_weights_at(const SpatialDataset& data,
                                               const KernelSpec& kernel,
                                               const BandwidthMatrix& h,
                                               std::span<const double> x) {
  const std::size_t n = data.n();
  const std::size_t d = data.dim();
  if (x.size() != d || kernel.dim != d || h.dim() != d)
    throw DimensionMismatch("smoother_weights_at: dimension mismatch");

  std::vector<double> kw(n);
  std::vector<double> diff(d);
  std::size_t positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = data.location(i);
    for (std::size_t k = 0; k < d; ++k) diff[k] = xi[k] - x[k];
    kw[i] = kernel_scaled(kernel, h, diff);
    if (kw[i] > 0.0) ++positive;
  }
  if (positive < d + 1)
    throw InsufficientLocalData(
        "smoother_weights_at: only " + std::to_string(positive) +
        " observations carry positive kernel weight; enlarge the bandwidth");

  // M = X'_x W_x X_x over the centered design (1, X_i - x).
  SymMatrix m(d + 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (kw[i] == 0.0) continue;
    const auto xi = data.location(i);
    for (std::size_t k = 0; k < d; ++k) diff[k] = xi[k] - x[k];
    m.at(0, 0) += kw[i];
    for (std::size_t r = 0; r < d; ++r) {
      m.at(r + 1, 0) += kw[i] * diff[r];
      for (std::size_t c = 0; c <= r; ++c)
        m.at(r + 1, c + 1) += kw[i] * diff[r] * diff[c];
    }
  }
  for (std::size_t r = 0; r < d + 1; ++r)
    for (std::size_t c = r + 1; c < d + 1; ++c) m.at(r, c) = m.at(c, r);

  std::vector<double> e1(d + 1, 0.0);
  e1[0] = 1.0;
  std::vector<double> s;
  try {
    s = spd_solve(m, e1);
  } catch (const NotPositiveDefinite&) {
    throw InsufficientLocalData(
        "smoother_weights_at: singular local design matrix; the bandwidth is "
        "too small for this evaluation point");
  }

  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (kw[i] == 0.0) continue;
    const auto xi = data.location(i);
    double lin = s[0];
    for (std::size_t k = 0; k < d; ++k) lin += s[k + 1] * (xi[k] - x[k]);
    w[i] = kw[i] * lin;
  }
  return w;
}

/// Multivariate local linear estimate of the regression function at x.
inline double local_linear_at(const SpatialDataset& data,
                              const KernelSpec& kernel,
                              const BandwidthMatrix& h,
                              std::span<const double> x) {
  const std::vector<double> w = smoother_weights_at(data, kernel, h, x);
  double v = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) v += w[i] * data.responses()[i];
  return v;
}

/// Smoothed parametric fit: the same smoother row applied to the vector of
/// parametric fitted values at the data locations instead of the responses.
inline double smooth_parametric_at(const SpatialDataset& data,
                                   std::span<const double> fitted_values,
                                   const KernelSpec& kernel,
                                   const BandwidthMatrix& h,
                                   std::span<const double> x) {
  if (fitted_values.size() != data.n())
    throw DimensionMismatch("smooth_parametric_at: fitted_values size mismatch");
  const std::vector<double> w = smoother_weights_at(data, kernel, h, x);
  double v = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) v += w[i] * fitted_values[i];
  return v;
}

/// Regression surface evaluated over a set of points.
struct SurfaceEstimate {
  std::vector<double> eval_points;  // m x d, row-major
  std::vector<double> values;       // m
  BandwidthMatrix bandwidth;
  KernelSpec kernel;
};

}  // namespace spatialgof

#endif  // SPATIALGOF_SMOOTHING_HPP
