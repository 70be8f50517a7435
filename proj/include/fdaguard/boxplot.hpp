#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fdaguard/core.hpp"
#include "fdaguard/depth.hpp"

namespace fdaguard {

using Curve = Eigen::RowVectorXd;

struct CentralRegion {
  Curve lower;
  Curve upper;
  Curve median_curve;
  std::size_t median_index = 0;
  std::vector<std::size_t> members;  // the ceil(n/2) deepest curves
};

struct Fences {
  Curve lower;
  Curve upper;
};

/// Signed distance by which a curve leaves the fences, and where.
struct Exceedance {
  double amount = 0.0;  // > 0 means the curve is outside at `index`
  std::size_t index = 0;
};

struct FunctionalBoxplot {
  DepthNotion depth_used = DepthNotion::Linf;
  Side side = Side::TwoSided;
  double factor = 1.5;
  DesignGrid grid;
  DepthResult depth;
  std::size_t median_index = 0;
  Curve median_curve;
  Curve central_lower;
  Curve central_upper;
  Curve fence_lower;
  Curve fence_upper;
  std::vector<std::size_t> outliers;  // row indices, ascending
  std::vector<std::string> outlier_ids;
};

CentralRegion central_region(const FunctionalSample& sample, const DepthResult& depth);

Fences fences(const Curve& lower, const Curve& upper, double factor);

Exceedance exceedance(const Eigen::Ref<const Curve>& curve, const Fences& f, Side side);

/// Curves that strictly exceed a fence at one or more design points. Side::Upper
/// checks only the upper fence, Side::Lower only the lower one.
std::vector<std::size_t> flag_outliers(const FunctionalSample& sample, const Fences& f, Side side);

/// Depth ordering, 50% central region, fences inflated by `factor` times the
/// region's range, and the flagged curves.
FunctionalBoxplot functional_boxplot(const FunctionalSample& sample, DepthNotion notion, double factor = 1.5,
                                     Side side = Side::TwoSided, const DepthOptions& options = {});

/// Same as above with a precomputed depth.
FunctionalBoxplot functional_boxplot(const FunctionalSample& sample, const DepthResult& depth, DepthNotion notion,
                                     double factor, Side side);

}  // namespace fdaguard
