#ifndef SPATIALGOF_TREND_HPP
#define SPATIALGOF_TREND_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spatialgof/dataset.hpp"
#include "spatialgof/errors.hpp"
#include "spatialgof/numerics.hpp"
#include "spatialgof/variography.hpp"

namespace spatialgof {

/// Polynomial trend surface family of total degree <= degree in dim
/// variables. The basis is ordered graded-lexicographically:
/// 1, x_1, x_2, x_1^2, x_1 x_2, x_2^2, ...
class TrendModel {
 public:
  TrendModel(std::size_t degree, std::size_t dim) : degree_(degree), dim_(dim) {
    std::vector<int> expo(dim_, 0);
    for (std::size_t total = 0; total <= degree_; ++total)
      append_monomials(expo, 0, static_cast<int>(total));
  }

  std::size_t degree() const { return degree_; }
  std::size_t dim() const { return dim_; }
  std::size_t basis_size() const { return exponents_.size(); }
  const std::vector<std::vector<int>>& exponents() const { return exponents_; }

  /// Row of basis functions at a point.
  void basis_row(std::span<const double> x, std::span<double> out) const {
    for (std::size_t j = 0; j < exponents_.size(); ++j) {
      double v = 1.0;
      for (std::size_t k = 0; k < dim_; ++k)
        for (int e = 0; e < exponents_[j][k]; ++e) v *= x[k];
      out[j] = v;
    }
  }

 private:
  void append_monomials(std::vector<int>& expo, std::size_t pos, int remaining) {
    if (pos + 1 == dim_) {
      expo[pos] = remaining;
      exponents_.push_back(expo);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      expo[pos] = e;
      append_monomials(expo, pos + 1, remaining - e);
    }
    expo[pos] = 0;
  }

  std::size_t degree_;
  std::size_t dim_;
  std::vector<std::vector<int>> exponents_;
};

struct TrendCoefficients {
  TrendModel model;
  std::vector<double> beta;

  double evaluate(std::span<const double> x) const {
    std::vector<double> row(model.basis_size());
    model.basis_row(x, row);
    double v = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) v += beta[j] * row[j];
    return v;
  }

  /// Fitted values m_beta(X_i) at a set of locations (row-major n x d).
  std::vector<double> evaluate_at(std::span<const double> locations) const {
    const std::size_t d = model.dim();
    const std::size_t n = locations.size() / d;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = evaluate(locations.subspan(i * d, d));
    return out;
  }
};

/// Small dense row-major matrix for design matrices.
struct DesignMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
  std::span<const double> row(std::size_t i) const {
    return {a.data() + i * cols, cols};
  }
};

inline DesignMatrix design_matrix(const TrendModel& model,
                                  std::span<const double> locations) {
  const std::size_t d = model.dim();
  if (locations.size() % d != 0)
    throw DimensionMismatch("design_matrix: bad locations shape");
  const std::size_t n = locations.size() / d;
  const std::size_t p = model.basis_size();
  if (n < p)
    throw DegenerateDesign("design_matrix: fewer rows than basis functions");
  DesignMatrix X{n, p, std::vector<double>(n * p)};
  for (std::size_t i = 0; i < n; ++i)
    model.basis_row(locations.subspan(i * d, d),
                    std::span<double>(X.a.data() + i * p, p));
  return X;
}

namespace detail {

/// Least squares through the normal equations; a Cholesky failure on X'X
/// means numerically collinear columns.
inline std::vector<double> normal_equations_solve(const DesignMatrix& X,
                                                  std::span<const double> y) {
  const std::size_t n = X.rows, p = X.cols;
  SymMatrix xtx(p);
  std::vector<double> xty(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = X.row(i);
    for (std::size_t r = 0; r < p; ++r) {
      xty[r] += row[r] * y[i];
      for (std::size_t c = 0; c <= r; ++c) xtx.at(r, c) += row[r] * row[c];
    }
  }
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t c = r + 1; c < p; ++c) xtx.at(r, c) = xtx.at(c, r);
  try {
    return spd_solve(xtx, xty);
  } catch (const NotPositiveDefinite&) {
    throw DegenerateDesign(
        "least squares: design matrix is rank deficient (collinear columns)");
  }
}

}  // namespace detail

/// Ordinary least squares estimate of the trend coefficients.
inline TrendCoefficients ols_fit(const TrendModel& model,
                                 const SpatialDataset& data) {
  if (model.dim() != data.dim())
    throw DimensionMismatch("ols_fit: model/data dimension mismatch");
  const DesignMatrix X = design_matrix(model, data.locations());
  return {model, detail::normal_equations_solve(X, data.responses())};
}

/// Generalized least squares with a given error covariance. Solved by
/// whitening: with sigma = L L', regress L^{-1} Z on L^{-1} X.
inline TrendCoefficients gls_fit(const TrendModel& model,
                                 const SpatialDataset& data,
                                 const SymMatrix& sigma) {
  if (model.dim() != data.dim())
    throw DimensionMismatch("gls_fit: model/data dimension mismatch");
  if (sigma.order() != data.n())
    throw DimensionMismatch("gls_fit: covariance order != n");
  const DesignMatrix X = design_matrix(model, data.locations());
  const LowerTriangular L = cholesky(sigma);

  const std::size_t n = X.rows, p = X.cols;
  DesignMatrix U{n, p, std::vector<double>(n * p)};
  std::vector<double> col(n);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = X.at(i, j);
    const std::vector<double> w = forward_solve(L, col);
    for (std::size_t i = 0; i < n; ++i) U.at(i, j) = w[i];
  }
  const std::vector<double> v = forward_solve(L, data.responses());
  return {model, detail::normal_equations_solve(U, v)};
}

struct IterConfig {
  int passes = 1;          // 1 reproduces the plain OLS -> variogram -> GLS chain
  double beta_tol = 1e-6;  // relative coefficient change stopping rule, passes > 1
  std::size_t n_bins = 13;
  double max_lag = 0.0;    // <= 0 means half the maximum pairwise distance
};

struct IterativeFitResult {
  TrendCoefficients beta;
  VariogramModel variogram;
  SymMatrix sigma;
  double wls_objective = 0.0;
  bool variogram_converged = false;
  int passes_used = 0;
};

inline double default_max_lag(const SpatialDataset& data) {
  double max_dist = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i)
    for (std::size_t j = i + 1; j < data.n(); ++j)
      max_dist = std::max(max_dist, data.distance(i, j));
  return 0.5 * max_dist;
}

/// Iterative least squares trend estimation:
///   1. initial coefficients by OLS,
///   2. variogram fitted by weighted least squares to the residual
///      semivariogram, giving the error covariance Sigma_theta,
///   3. coefficients re-estimated by GLS with that covariance.
/// With passes > 1, steps 2-3 repeat on the latest residuals until the
/// coefficients stabilize or the pass budget runs out.
inline IterativeFitResult iterative_fit(const TrendModel& model,
                                        const SpatialDataset& data,
                                        VariogramFamily family,
                                        const IterConfig& config = {}) {
  TrendCoefficients beta = ols_fit(model, data);
  const double max_lag =
      config.max_lag > 0.0 ? config.max_lag : default_max_lag(data);

  IterativeFitResult out{beta, VariogramModel{}, SymMatrix{}, 0.0, false, 0};
  std::vector<double> resid(data.n());
  for (int pass = 0; pass < std::max(config.passes, 1); ++pass) {
    const std::vector<double> fitted = beta.evaluate_at(data.locations());
    for (std::size_t i = 0; i < data.n(); ++i)
      resid[i] = data.responses()[i] - fitted[i];

    const EmpiricalVariogram emp = empirical_semivariogram(
        data.locations(), data.dim(), resid, config.n_bins, max_lag);
    const VariogramFitResult fit = fit_variogram_wls(emp, family);
    SymMatrix sigma = covariance_matrix(fit.model, data.locations(), data.dim());
    TrendCoefficients next = gls_fit(model, data, sigma);

    double delta = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < next.beta.size(); ++j) {
      delta += (next.beta[j] - beta.beta[j]) * (next.beta[j] - beta.beta[j]);
      norm += next.beta[j] * next.beta[j];
    }
    beta = next;
    out.beta = std::move(next);
    out.variogram = fit.model;
    out.sigma = std::move(sigma);
    out.wls_objective = fit.objective;
    out.variogram_converged = fit.converged;
    out.passes_used = pass + 1;
    if (std::sqrt(delta) < config.beta_tol * std::max(std::sqrt(norm), 1e-12))
      break;
  }
  return out;
}

}  // namespace spatialgof

#endif  // SPATIALGOF_TREND_HPP
