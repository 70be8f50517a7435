#pragma once

#include <random>
#include <vector>

#include "fdaguard/core.hpp"

namespace fdaguard::testing {

inline FunctionalSample constant_curves(const std::vector<double>& levels, std::size_t m = 5) {
  Matrix v(static_cast<Eigen::Index>(levels.size()), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < levels.size(); ++i) v.row(static_cast<Eigen::Index>(i)).setConstant(levels[i]);
  return FunctionalSample(DesignGrid::equidistant(m), v);
}

inline FunctionalSample from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix v(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return FunctionalSample(DesignGrid::equidistant(rows.front().size()), v);
}

inline Matrix normal_matrix(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Matrix v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = z(rng);
  return v;
}

/// Small integers so that ties are common.
inline Matrix tied_matrix(std::size_t n, std::size_t m, int levels, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, levels - 1);
  Matrix v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = u(rng);
  return v;
}

inline DesignGrid random_grid(std::size_t m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> t{0.0};
  for (std::size_t j = 1; j < m; ++j) t.push_back(t.back() + u(rng));
  return DesignGrid(t);
}

}  // namespace fdaguard::testing
