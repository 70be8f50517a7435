#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fdaguard {

/// Raised for invalid input, degenerate data and ill-formed configurations.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Strictly increasing design points with trapezoidal quadrature weights.
class DesignGrid {
 public:
  explicit DesignGrid(std::vector<double> points);

  /// m equidistant points on [lo, hi].
  static DesignGrid equidistant(std::size_t m, double lo = 0.0, double hi = 1.0);

  std::size_t size() const { return points_.size(); }
  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  double operator[](std::size_t j) const { return points_[j]; }
  /// Lebesgue measure of the covered interval, t_m - t_1.
  double length() const { return points_.back() - points_.front(); }

  bool operator==(const DesignGrid& other) const { return points_ == other.points_; }

 private:
  std::vector<double> points_;
  std::vector<double> weights_;
};

/// n curves (rows) observed on a shared grid.
struct FunctionalSample {
  DesignGrid grid;
  Matrix values;
  std::vector<std::string> ids;

  FunctionalSample(DesignGrid g, Matrix v, std::vector<std::string> curve_ids = {});

  std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t m() const { return static_cast<std::size_t>(values.cols()); }
};

/// n curves with d response dimensions; one n x m matrix per dimension.
struct MultivariateFunctionalSample {
  DesignGrid grid;
  std::vector<Matrix> dims;
  std::vector<std::string> ids;

  MultivariateFunctionalSample(DesignGrid g, std::vector<Matrix> d,
                               std::vector<std::string> curve_ids = {});

  std::size_t n() const { return static_cast<std::size_t>(dims.front().rows()); }
  std::size_t m() const { return static_cast<std::size_t>(dims.front().cols()); }
  std::size_t d() const { return dims.size(); }
  FunctionalSample margin(std::size_t k) const;
};

/// Which tail counts as extreme when ranks are turned into outlyingness.
enum class Side { Lower, Upper, TwoSided };

std::string to_string(Side side);
Side side_from_string(const std::string& name);

struct RankMatrix {
  Matrix raw;    // tie-averaged ranks, smallest value has rank 1
  Matrix sided;  // per the requested side
  Side side = Side::TwoSided;
};

/// Tie-averaged ranks of `values` (1-based, ascending).
std::vector<double> average_ranks(std::span<const double> values);

RankMatrix pointwise_ranks(const Matrix& values, Side side);
inline RankMatrix pointwise_ranks(const FunctionalSample& sample, Side side) {
  return pointwise_ranks(sample.values, side);
}

enum class Polarity { Depth, Outlyingness };

/// Per-curve centrality values plus the center-outward order they induce.
struct DepthResult {
  std::vector<double> values;
  Polarity polarity = Polarity::Depth;
  std::vector<std::size_t> order;  // deepest first; ties keep index order

  DepthResult() = default;
  DepthResult(std::vector<double> v, Polarity p);

  std::size_t size() const { return values.size(); }
  /// True when curve a is strictly more central than b.
  bool deeper(std::size_t a, std::size_t b) const;
  /// Tie-averaged rank of every curve, 1 = most extreme.
  std::vector<double> extremeness_ranks() const;
};

/// Linear interpolation of the order statistics at position p(n-1).
double empirical_quantile(std::span<const double> values, double p);
double median(std::span<const double> values);

/// Trapezoidal integral of a curve over the grid.
double integrate(std::span<const double> curve, const DesignGrid& grid);
double integrate(const Eigen::Ref<const Eigen::RowVectorXd>& curve, const DesignGrid& grid);

/// Copies row i of a matrix into a std::vector.
std::vector<double> row_vector(const Matrix& values, Eigen::Index i);
std::vector<double> col_vector(const Matrix& values, Eigen::Index j);

/// Default curve labels "1", "2", ...
std::vector<std::string> default_ids(std::size_t n);

/// Mixes a study seed with a stream key into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key1, std::uint64_t key2);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must
/// be written to per-index slots so the outcome does not depend on scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace fdaguard
