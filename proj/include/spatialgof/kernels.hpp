#ifndef SPATIALGOF_KERNELS_HPP
#define SPATIALGOF_KERNELS_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spatialgof/errors.hpp"

namespace spatialgof {

inline constexpr double kPi = 3.141592653589793238462643383280;

enum class KernelFamily {
  MultiplicativeTriweight,  // product of (35/32)(1-u^2)^3 on [-1,1] per axis
  Gaussian,                 // standard d-variate normal density
};

inline std::string kernel_family_name(KernelFamily f) {
  return f == KernelFamily::Gaussian ? "gaussian" : "triweight";
}

/// Diagonal bandwidth matrix H = diag(h_1,...,h_d), all entries positive.
class BandwidthMatrix {
 public:
  BandwidthMatrix() = default;
  explicit BandwidthMatrix(std::vector<double> diagonal)
      : h_(std::move(diagonal)) {
    for (double v : h_)
      if (!(v > 0.0))
        throw DimensionMismatch("BandwidthMatrix: entries must be positive");
  }
  static BandwidthMatrix scalar(std::size_t dim, double h) {
    return BandwidthMatrix(std::vector<double>(dim, h));
  }

  std::size_t dim() const { return h_.size(); }
  double operator[](std::size_t j) const { return h_[j]; }
  const std::vector<double>& diagonal() const { return h_; }

  double det() const {
    double d = 1.0;
    for (double v : h_) d *= v;
    return d;
  }

 private:
  std::vector<double> h_;
};

namespace detail {

inline double triweight1(double u) {
  const double t = 1.0 - u * u;
  return t > 0.0 ? 1.09375 * t * t * t : 0.0;  // 35/32 = 1.09375
}

/// Composite Simpson over [a,b] with n subintervals (n forced even).
template <typename F>
double simpson(F&& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

struct TriweightSelfConvolutions {
  double k2_at_zero;  // (k*k)(0)   = 350/429 analytically
  double k4_at_zero;  // (k*k*k*k)(0)
};

/// One-time numeric self-convolution of the univariate triweight. The
/// integrands are piecewise polynomials, so Simpson at step <= 1/1024
/// leaves errors far below every tolerance used downstream.
inline const TriweightSelfConvolutions& triweight_self_convolutions() {
  static const TriweightSelfConvolutions cached = [] {
    auto conv2 = [](double v) {
      const double lo = std::max(-1.0, v - 1.0);
      const double hi = std::min(1.0, v + 1.0);
      if (hi <= lo) return 0.0;
      const int n = std::max(32, static_cast<int>(std::ceil((hi - lo) * 1024)));
      return simpson(
          [v](double u) { return triweight1(u) * triweight1(v - u); }, lo, hi,
          n);
    };
    TriweightSelfConvolutions c;
    c.k2_at_zero = conv2(0.0);
    c.k4_at_zero =
        simpson([&](double v) { const double k2 = conv2(v); return k2 * k2; },
                -2.0, 2.0, 4096);
    return c;
  }();
  return cached;
}

}  // namespace detail

/// Kernel family plus dimension. Densities integrate to one over R^d and
/// are symmetric; the triweight has compact support [-1,1]^d.
struct KernelSpec {
  KernelFamily family = KernelFamily::MultiplicativeTriweight;
  std::size_t dim = 2;
};

inline double kernel_eval(const KernelSpec& k, std::span<const double> u) {
  if (u.size() != k.dim)
    throw DimensionMismatch("kernel_eval: point dimension " +
                            std::to_string(u.size()) + " != kernel dim " +
                            std::to_string(k.dim));
  if (k.family == KernelFamily::Gaussian) {
    double q = 0.0;
    for (double v : u) q += v * v;
    return std::pow(2.0 * kPi, -0.5 * static_cast<double>(k.dim)) *
           std::exp(-0.5 * q);
  }
  double prod = 1.0;
  for (double v : u) {
    const double f = detail::triweight1(v);
    if (f == 0.0) return 0.0;
    prod *= f;
  }
  return prod;
}

/// K_H(x) = |H|^{-1} K(H^{-1} x) for diagonal H.
inline double kernel_scaled(const KernelSpec& k, const BandwidthMatrix& h,
                            std::span<const double> x) {
  if (x.size() != k.dim || h.dim() != k.dim)
    throw DimensionMismatch("kernel_scaled: dimension mismatch");
  double scaled[8];
  std::vector<double> heap;
  double* u = k.dim <= 8 ? scaled : (heap.resize(k.dim), heap.data());
  for (std::size_t j = 0; j < k.dim; ++j) u[j] = x[j] / h[j];
  return kernel_eval(k, std::span<const double>(u, k.dim)) / h.det();
}

/// K^{(j)}(0), the j-fold self-convolution of K at the origin, j in {2,4}.
/// Gaussian values are closed form; triweight values come from the cached
/// univariate convolution raised to the d-th power (product kernel).
inline double self_convolution_at_zero(const KernelSpec& k, int j) {
  if (j != 2 && j != 4)
    throw UnsupportedOrder("self_convolution_at_zero: order must be 2 or 4");
  const double d = static_cast<double>(k.dim);
  if (k.family == KernelFamily::Gaussian) {
    // K*K is the N(0, 2I) density, K*K*K*K the N(0, 4I) density.
    const double variance = (j == 2) ? 2.0 : 4.0;
    return std::pow(2.0 * kPi * variance, -0.5 * d);
  }
  const auto& c = detail::triweight_self_convolutions();
  const double k1 = (j == 2) ? c.k2_at_zero : c.k4_at_zero;
  return std::pow(k1, d);
}

}  // namespace spatialgof

#endif  // SPATIALGOF_KERNELS_HPP
