#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fdaguard/core.hpp"

namespace fdaguard {

struct McdOptions {
  std::size_t starts = 500;
  std::uint64_t seed = 0x4D43445F53454544ULL;
  /// Samples with at most this many points are searched exhaustively.
  std::size_t exhaustive_limit = 12;
  std::size_t max_csteps = 100;
};

/// Location and scatter of the h-subset with the smallest covariance determinant.
struct MCDEstimate {
  Vector location;
  Matrix scatter;
  std::vector<std::size_t> support;  // ascending row indices, size h
  double log_det = 0.0;
};

/// Dispatches to the exhaustive search for small n, otherwise random
/// elemental starts refined by concentration steps.
MCDEstimate mcd(const Matrix& points, std::size_t h, const McdOptions& options = {});

MCDEstimate mcd_exhaustive(const Matrix& points, std::size_t h);
MCDEstimate mcd_iterative(const Matrix& points, std::size_t h, const McdOptions& options = {});

/// Squared Mahalanobis distances of every row of `points` under the estimate.
Vector mahalanobis_sq(const Matrix& points, const MCDEstimate& estimate);

}  // namespace fdaguard
