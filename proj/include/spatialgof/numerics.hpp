#ifndef SPATIALGOF_NUMERICS_HPP
#define SPATIALGOF_NUMERICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spatialgof/errors.hpp"

namespace spatialgof {

/// Dense symmetric matrix, full row-major storage.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t order)
      : order_(order), a_(order * order, 0.0) {}

  static SymMatrix identity(std::size_t order) {
    SymMatrix m(order);
    for (std::size_t i = 0; i < order; ++i) m.at(i, i) = 1.0;
    return m;
  }

  /// Builds from full row-major entries; rejects asymmetry beyond a 1e-12
  /// relative tolerance.
  static SymMatrix from_entries(std::size_t order, std::vector<double> entries) {
    SymMatrix m;
    m.order_ = order;
    m.a_ = std::move(entries);
    double scale = 0.0;
    for (double v : m.a_) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < order; ++i)
      for (std::size_t j = i + 1; j < order; ++j)
        if (std::abs(m.at(i, j) - m.at(j, i)) > 1e-12 * std::max(1.0, scale))
          throw DimensionMismatch("SymMatrix::from_entries: input is not symmetric");
    return m;
  }

  std::size_t order() const { return order_; }
  double& at(std::size_t i, std::size_t j) { return a_[i * order_ + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * order_ + j]; }
  const std::vector<double>& entries() const { return a_; }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < order_; ++i) t += at(i, i);
    return t;
  }

  /// In-place diagonal ridge. Callers that want regularization opt in
  /// explicitly; cholesky() itself never regularizes.
  void add_ridge(double value) {
    for (std::size_t i = 0; i < order_; ++i) at(i, i) += value;
  }

 private:
  std::size_t order_ = 0;
  std::vector<double> a_;
};

/// Lower-triangular factor, full row-major storage with an exact zero
/// upper triangle.
class LowerTriangular {
 public:
  LowerTriangular() = default;
  explicit LowerTriangular(std::size_t order)
      : order_(order), l_(order * order, 0.0) {}

  std::size_t order() const { return order_; }
  double& at(std::size_t i, std::size_t j) { return l_[i * order_ + j]; }
  double at(std::size_t i, std::size_t j) const { return l_[i * order_ + j]; }
  const std::vector<double>& entries() const { return l_; }

 private:
  std::size_t order_ = 0;
  std::vector<double> l_;
};

/// Cholesky factorization a = L L'. A pivot at or below the jitter floor
/// 1e-12 * trace(a) / order fails loudly instead of being regularized.
inline LowerTriangular cholesky(const SymMatrix& a) {
  const std::size_t n = a.order();
  if (n == 0) throw DimensionMismatch("cholesky: empty matrix");
  const double floor = 1e-12 * a.trace() / static_cast<double>(n);
  LowerTriangular L(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = a.at(i, j);
      // Row prefixes are contiguous, so this inner dot product vectorizes.
      for (std::size_t k = 0; k < j; ++k) sum -= L.at(i, k) * L.at(j, k);
      if (i == j) {
        if (sum <= floor)
          throw NotPositiveDefinite("cholesky: pivot " + std::to_string(i) +
                                    " below jitter floor (" +
                                    std::to_string(sum) + ")");
        L.at(i, i) = std::sqrt(sum);
      } else {
        L.at(i, j) = sum / L.at(j, j);
      }
    }
  }
  return L;
}

/// Solves L y = b by forward substitution.
inline std::vector<double> forward_solve(const LowerTriangular& L,
                                         std::span<const double> b) {
  const std::size_t n = L.order();
  if (b.size() != n) throw DimensionMismatch("forward_solve: size mismatch");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = b[i];
    for (std::size_t k = 0; k < i; ++k) sum -= L.at(i, k) * y[k];
    y[i] = sum / L.at(i, i);
  }
  return y;
}

/// Solves L' x = b by backward substitution.
inline std::vector<double> backward_solve_transpose(const LowerTriangular& L,
                                                    std::span<const double> b) {
  const std::size_t n = L.order();
  if (b.size() != n)
    throw DimensionMismatch("backward_solve_transpose: size mismatch");
  std::vector<double> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double sum = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) sum -= L.at(k, ii) * x[k];
    x[ii] = sum / L.at(ii, ii);
  }
  return x;
}

/// Solves a x = b for positive definite a via Cholesky.
inline std::vector<double> spd_solve(const SymMatrix& a,
                                     std::span<const double> b) {
  const LowerTriangular L = cholesky(a);
  const std::vector<double> y = forward_solve(L, b);
  return backward_solve_transpose(L, y);
}

/// Matrix-vector product for round-trip checks.
inline std::vector<double> sym_matvec(const SymMatrix& a,
                                      std::span<const double> x) {
  const std::size_t n = a.order();
  if (x.size() != n) throw DimensionMismatch("sym_matvec: size mismatch");
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += a.at(i, j) * x[j];
    y[i] = sum;
  }
  return y;
}

struct NelderMeadResult {
  std::vector<double> x;
  double fval = 0.0;
  int iterations = 0;
  /// False means MaxIterationsExceeded: x holds the best point seen.
  bool converged = false;
};

/// Derivative-free simplex minimization over a box. Proposals outside the
/// box are clamped onto it.
inline NelderMeadResult nelder_mead(
    const std::function<double(std::span<const double>)>& objective,
    std::span<const double> start, std::span<const double> lower,
    std::span<const double> upper, double tol, int max_iter) {
  const std::size_t q = start.size();
  if (q == 0 || lower.size() != q || upper.size() != q)
    throw DimensionMismatch("nelder_mead: inconsistent dimensions");

  auto clamp = [&](std::vector<double>& x) {
    for (std::size_t j = 0; j < q; ++j)
      x[j] = std::clamp(x[j], lower[j], upper[j]);
  };

  std::vector<std::vector<double>> simplex(q + 1,
                                           std::vector<double>(start.begin(), start.end()));
  clamp(simplex[0]);
  for (std::size_t j = 0; j < q; ++j) {
    double step = 0.05 * (upper[j] - lower[j]);
    if (step <= 0.0) step = 1e-8;
    if (simplex[j + 1][j] + step > upper[j]) step = -step;
    simplex[j + 1][j] += step;
    clamp(simplex[j + 1]);
  }

  std::vector<double> fvals(q + 1);
  for (std::size_t v = 0; v <= q; ++v) fvals[v] = objective(simplex[v]);

  std::vector<std::size_t> idx(q + 1);
  auto order = [&] {
    for (std::size_t v = 0; v <= q; ++v) idx[v] = v;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
  };

  std::vector<double> centroid(q), trial(q), trial2(q);
  int iter = 0;
  bool converged = false;
  const double xtol = std::sqrt(tol);
  for (; iter < max_iter; ++iter) {
    order();
    const std::size_t best = idx[0], worst = idx[q];
    // Converge on both the f-spread and the simplex extent; an f-tie with a
    // wide simplex (symmetric objectives) must keep contracting.
    double xspread = 0.0, xscale = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      xscale = std::max(xscale, std::abs(simplex[best][j]));
      for (std::size_t v = 0; v <= q; ++v)
        xspread = std::max(xspread, std::abs(simplex[v][j] - simplex[best][j]));
    }
    if (fvals[worst] - fvals[best] <=
            tol * (std::abs(fvals[best]) + std::abs(fvals[worst]) + tol) &&
        xspread <= xtol * (1.0 + xscale)) {
      converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t v = 0; v <= q; ++v) {
      if (idx[v] == worst) continue;
      for (std::size_t j = 0; j < q; ++j) centroid[j] += simplex[idx[v]][j];
    }
    for (std::size_t j = 0; j < q; ++j) centroid[j] /= static_cast<double>(q);

    auto propose = [&](std::vector<double>& out, double coef) {
      for (std::size_t j = 0; j < q; ++j)
        out[j] = centroid[j] + coef * (centroid[j] - simplex[worst][j]);
      clamp(out);
    };

    propose(trial, 1.0);  // reflection
    const double f_reflect = objective(trial);
    if (f_reflect < fvals[best]) {
      propose(trial2, 2.0);  // expansion
      const double f_expand = objective(trial2);
      if (f_expand < f_reflect) {
        simplex[worst] = trial2;
        fvals[worst] = f_expand;
      } else {
        simplex[worst] = trial;
        fvals[worst] = f_reflect;
      }
      continue;
    }
    if (f_reflect < fvals[idx[q - 1]]) {
      simplex[worst] = trial;
      fvals[worst] = f_reflect;
      continue;
    }
    propose(trial2, -0.5);  // contraction toward the better side
    const double f_contract = objective(trial2);
    if (f_contract < std::min(f_reflect, fvals[worst])) {
      simplex[worst] = trial2;
      fvals[worst] = f_contract;
      continue;
    }
    // Shrink toward the best vertex.
    for (std::size_t v = 0; v <= q; ++v) {
      if (idx[v] == best) continue;
      auto& vert = simplex[idx[v]];
      for (std::size_t j = 0; j < q; ++j)
        vert[j] = simplex[best][j] + 0.5 * (vert[j] - simplex[best][j]);
      clamp(vert);
      fvals[idx[v]] = objective(vert);
    }
  }

  order();
  NelderMeadResult result;
  result.x = simplex[idx[0]];
  result.fval = fvals[idx[0]];
  result.iterations = iter;
  result.converged = converged;
  return result;
}

}  // namespace spatialgof

#endif  // SPATIALGOF_NUMERICS_HPP
