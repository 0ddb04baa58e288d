#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "spatialgof/kernels.hpp"
#include "spatialgof/rng.hpp"

using namespace spatialgof;

namespace {

// Independent tensor-grid midpoint quadrature of f over [lo,hi]^2.
template <typename F>
double quad2(F&& f, double lo, double hi, int m) {
  const double w = (hi - lo) / m;
  double acc = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double x[2] = {lo + (i + 0.5) * w, lo + (j + 0.5) * w};
      acc += f(x[0], x[1]);
    }
  return acc * w * w;
}

}  // namespace

TEST_CASE("triweight values at the origin and outside support") {
  const KernelSpec k{KernelFamily::MultiplicativeTriweight, 2};
  const std::vector<double> origin = {0.0, 0.0};
  REQUIRE(std::abs(kernel_eval(k, origin) - 1.09375 * 1.09375) < 1e-12);
  const std::vector<double> outside = {1.5, 0.0};
  REQUIRE(kernel_eval(k, outside) == 0.0);
  const std::vector<double> edge = {1.0, 0.0};
  REQUIRE(kernel_eval(k, edge) == 0.0);
}

TEST_CASE("gaussian value at the origin") {
  const KernelSpec k{KernelFamily::Gaussian, 2};
  const std::vector<double> origin = {0.0, 0.0};
  REQUIRE(std::abs(kernel_eval(k, origin) - 1.0 / (2.0 * kPi)) < 1e-12);
}

TEST_CASE("kernel symmetry") {
  Rng rng(3);
  for (const KernelFamily family :
       {KernelFamily::MultiplicativeTriweight, KernelFamily::Gaussian}) {
    const KernelSpec k{family, 2};
    for (int rep = 0; rep < 50; ++rep) {
      const std::vector<double> u = {3.0 * rng.uniform01() - 1.5,
                                     3.0 * rng.uniform01() - 1.5};
      const std::vector<double> nu = {-u[0], -u[1]};
      REQUIRE(kernel_eval(k, u) == kernel_eval(k, nu));
    }
  }
}

TEST_CASE("kernel_scaled identity bandwidth equals kernel_eval") {
  const KernelSpec k{KernelFamily::MultiplicativeTriweight, 2};
  const BandwidthMatrix h = BandwidthMatrix::scalar(2, 1.0);
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const std::vector<double> u = {2.0 * rng.uniform01() - 1.0,
                                   2.0 * rng.uniform01() - 1.0};
    REQUIRE(kernel_scaled(k, h, u) == kernel_eval(k, u));
  }
}

TEST_CASE("kernel_scaled closed-form gaussian value") {
  const KernelSpec k{KernelFamily::Gaussian, 2};
  const BandwidthMatrix h = BandwidthMatrix::scalar(2, 2.0);
  const std::vector<double> origin = {0.0, 0.0};
  REQUIRE(std::abs(kernel_scaled(k, h, origin) - 0.25 / (2.0 * kPi)) < 1e-12);
}

TEST_CASE("kernel_scaled integrates to one (quadrature oracle)") {
  const KernelSpec k{KernelFamily::MultiplicativeTriweight, 2};
  const BandwidthMatrix h({0.6, 0.8});
  const double integral = quad2(
      [&](double x, double y) {
        const std::vector<double> p = {x, y};
        return kernel_scaled(k, h, p);
      },
      -1.0, 1.0, 600);
  REQUIRE(std::abs(integral - 1.0) < 1e-3);

  const KernelSpec g{KernelFamily::Gaussian, 2};
  const BandwidthMatrix hg({0.5, 0.7});
  const double integral_g = quad2(
      [&](double x, double y) {
        const std::vector<double> p = {x, y};
        return kernel_scaled(g, hg, p);
      },
      -6.0, 6.0, 600);
  REQUIRE(std::abs(integral_g - 1.0) < 1e-3);
}

TEST_CASE("kernel_scaled scaling consistency with scalar bandwidth") {
  Rng rng(9);
  for (const KernelFamily family :
       {KernelFamily::MultiplicativeTriweight, KernelFamily::Gaussian}) {
    const KernelSpec k{family, 2};
    const double c = 0.7;
    const BandwidthMatrix h = BandwidthMatrix::scalar(2, c);
    for (int rep = 0; rep < 30; ++rep) {
      const std::vector<double> x = {2.0 * rng.uniform01() - 1.0,
                                     2.0 * rng.uniform01() - 1.0};
      const std::vector<double> xc = {x[0] / c, x[1] / c};
      const double lhs = kernel_scaled(k, h, x);
      const double rhs = kernel_eval(k, xc) / (c * c);
      REQUIRE(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST_CASE("gaussian self-convolutions match closed forms") {
  const KernelSpec k2d{KernelFamily::Gaussian, 2};
  REQUIRE(std::abs(self_convolution_at_zero(k2d, 2) - 1.0 / (4.0 * kPi)) < 1e-12);
  REQUIRE(std::abs(self_convolution_at_zero(k2d, 4) - 1.0 / (8.0 * kPi)) < 1e-12);
  const KernelSpec k1d{KernelFamily::Gaussian, 1};
  REQUIRE(std::abs(self_convolution_at_zero(k1d, 2) -
                   1.0 / (2.0 * std::sqrt(kPi))) < 1e-12);
}

TEST_CASE("K2(0) equals the integral of K^2 (quadrature oracle)") {
  for (const KernelFamily family :
       {KernelFamily::Gaussian, KernelFamily::MultiplicativeTriweight}) {
    const KernelSpec k{family, 2};
    const double lim = family == KernelFamily::Gaussian ? 6.0 : 1.0;
    const double integral = quad2(
        [&](double x, double y) {
          const std::vector<double> p = {x, y};
          const double v = kernel_eval(k, p);
          return v * v;
        },
        -lim, lim, 800);
    REQUIRE(std::abs(self_convolution_at_zero(k, 2) - integral) < 1e-6);
  }
}

TEST_CASE("triweight K2(0) matches the exact univariate constant") {
  // Univariate triweight has int k^2 = 350/429; the 2-d product kernel
  // squares it.
  const KernelSpec k{KernelFamily::MultiplicativeTriweight, 2};
  const double expected = (350.0 / 429.0) * (350.0 / 429.0);
  REQUIRE(std::abs(self_convolution_at_zero(k, 2) - expected) < 1e-9);
}

TEST_CASE("self_convolution_at_zero rejects unsupported orders") {
  const KernelSpec k{KernelFamily::Gaussian, 2};
  REQUIRE_THROWS_AS(self_convolution_at_zero(k, 3), UnsupportedOrder);
}

TEST_CASE("dimension mismatches are rejected") {
  const KernelSpec k{KernelFamily::Gaussian, 2};
  const std::vector<double> u = {0.0};
  REQUIRE_THROWS_AS(kernel_eval(k, u), DimensionMismatch);
  REQUIRE_THROWS_AS(BandwidthMatrix({1.0, -0.5}), DimensionMismatch);
}
