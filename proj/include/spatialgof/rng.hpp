#ifndef SPATIALGOF_RNG_HPP
#define SPATIALGOF_RNG_HPP

#include <cmath>
#include <cstdint>
#include <cstddef>

namespace spatialgof {

/// SplitMix64 step. Used both as a stream on its own and to expand seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for unit `index` of a parallel batch. Every replicate,
/// bootstrap draw or trace entry owns an independent derived stream, so
/// results do not depend on thread count or execution order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return seed ^ splitmix64(index + 1);
}

/// xoshiro256++ generator with fixed scalar transforms to doubles.
///
/// The raw stream, the uniform mapping (53-bit mantissa) and the
/// Box-Muller normal transform are all spelled out here so that any two
/// builds reproduce bit-identical variates from the same seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x = splitmix64(x);
      word = x;
    }
    has_spare_ = false;
    spare_ = 0.0;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0,1): top 53 bits scaled by 2^-53.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform index in {0,...,n-1}.
  std::size_t uniform_index(std::size_t n) {
    const auto k = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return k >= n ? n - 1 : k;
  }

  /// Standard normal via Box-Muller; the second variate of each pair is
  /// cached and returned on the next call.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0,1], keeps log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  bool has_spare_;
  double spare_;
};

}  // namespace spatialgof

#endif  // SPATIALGOF_RNG_HPP
