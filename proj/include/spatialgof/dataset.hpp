#ifndef SPATIALGOF_DATASET_HPP
#define SPATIALGOF_DATASET_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spatialgof/errors.hpp"

namespace spatialgof {

/// Sample {(X_i, Z_i)}: n locations in R^d with scalar responses.
class SpatialDataset {
 public:
  SpatialDataset() = default;
  SpatialDataset(std::size_t dim, std::vector<double> locations,
                 std::vector<double> responses)
      : dim_(dim),
        locations_(std::move(locations)),
        responses_(std::move(responses)) {
    if (dim_ == 0 || locations_.size() % dim_ != 0)
      throw DimensionMismatch("SpatialDataset: locations not a multiple of dim");
    if (locations_.size() / dim_ != responses_.size())
      throw DimensionMismatch("SpatialDataset: locations/responses size mismatch");
    for (double v : locations_)
      if (!std::isfinite(v))
        throw DimensionMismatch("SpatialDataset: non-finite coordinate");
    for (double v : responses_)
      if (!std::isfinite(v))
        throw DimensionMismatch("SpatialDataset: non-finite response");
    if (n() < dim_ + 2)
      throw DimensionMismatch("SpatialDataset: need at least d+2 observations");
  }

  std::size_t dim() const { return dim_; }
  std::size_t n() const { return responses_.size(); }

  std::span<const double> location(std::size_t i) const {
    return {locations_.data() + i * dim_, dim_};
  }
  const std::vector<double>& locations() const { return locations_; }
  const std::vector<double>& responses() const { return responses_; }

  double distance(std::size_t i, std::size_t j) const {
    double q = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) {
      const double d = locations_[i * dim_ + k] - locations_[j * dim_ + k];
      q += d * d;
    }
    return std::sqrt(q);
  }

  /// Index pairs sharing identical coordinates. Duplicates are legal but
  /// worth a warning in front ends.
  std::vector<std::pair<std::size_t, std::size_t>> duplicate_locations() const {
    std::vector<std::pair<std::size_t, std::size_t>> dups;
    for (std::size_t i = 0; i < n(); ++i)
      for (std::size_t j = i + 1; j < n(); ++j) {
        bool same = true;
        for (std::size_t k = 0; k < dim_; ++k)
          if (locations_[i * dim_ + k] != locations_[j * dim_ + k]) {
            same = false;
            break;
          }
        if (same) dups.emplace_back(i, j);
      }
    return dups;
  }

  /// Axis-aligned bounding box: (lower corner, upper corner).
  std::pair<std::vector<double>, std::vector<double>> bounding_box() const {
    std::vector<double> lo(dim_, 0.0), hi(dim_, 0.0);
    for (std::size_t k = 0; k < dim_; ++k) {
      lo[k] = hi[k] = locations_[k];
    }
    for (std::size_t i = 1; i < n(); ++i)
      for (std::size_t k = 0; k < dim_; ++k) {
        const double v = locations_[i * dim_ + k];
        if (v < lo[k]) lo[k] = v;
        if (v > hi[k]) hi[k] = v;
      }
    return {lo, hi};
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> locations_;
  std::vector<double> responses_;
};

}  // namespace spatialgof

#endif  // SPATIALGOF_DATASET_HPP
