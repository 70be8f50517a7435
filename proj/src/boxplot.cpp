#include "fdaguard/boxplot.hpp"

#include <algorithm>
#include <limits>

namespace fdaguard {

CentralRegion central_region(const FunctionalSample& sample, const DepthResult& depth) {
  const std::size_t n = sample.n();
  if (n < 2) throw Error("central region needs at least 2 curves");
  if (depth.size() != n) throw Error("depth result does not match the sample");
  CentralRegion region;
  const std::size_t keep = (n + 1) / 2;
  region.members.assign(depth.order.begin(), depth.order.begin() + static_cast<std::ptrdiff_t>(keep));
  region.median_index = depth.order.front();
  region.median_curve = sample.values.row(static_cast<Eigen::Index>(region.median_index));
  region.lower = region.median_curve;
  region.upper = region.median_curve;
  for (auto i : region.members) {
    region.lower = region.lower.cwiseMin(sample.values.row(static_cast<Eigen::Index>(i)));
    region.upper = region.upper.cwiseMax(sample.values.row(static_cast<Eigen::Index>(i)));
  }
  return region;
}

Fences fences(const Curve& lower, const Curve& upper, double factor) {
  if (!(factor >= 0.0)) throw Error("fence factor must be nonnegative");
  if (lower.size() != upper.size()) throw Error("central region bounds differ in length");
  const Curve range = upper - lower;
  return Fences{lower - factor * range, upper + factor * range};
}

Exceedance exceedance(const Eigen::Ref<const Curve>& curve, const Fences& f, Side side) {
  Exceedance best{-std::numeric_limits<double>::infinity(), 0};
  for (Eigen::Index j = 0; j < curve.size(); ++j) {
    double amount = -std::numeric_limits<double>::infinity();
    if (side != Side::Lower) amount = std::max(amount, curve(j) - f.upper(j));
    if (side != Side::Upper) amount = std::max(amount, f.lower(j) - curve(j));
    if (amount > best.amount) best = {amount, static_cast<std::size_t>(j)};
  }
  return best;
}

std::vector<std::size_t> flag_outliers(const FunctionalSample& sample, const Fences& f, Side side) {
  if (static_cast<std::size_t>(f.lower.size()) != sample.m()) throw Error("fences do not match the sample grid");
  std::vector<std::size_t> out;
  for (Eigen::Index i = 0; i < sample.values.rows(); ++i)
    if (exceedance(sample.values.row(i), f, side).amount > 0.0) out.push_back(static_cast<std::size_t>(i));
  return out;
}

FunctionalBoxplot functional_boxplot(const FunctionalSample& sample, const DepthResult& depth, DepthNotion notion,
                                     double factor, Side side) {
  const CentralRegion region = central_region(sample, depth);
  const Fences f = fences(region.lower, region.upper, factor);
  FunctionalBoxplot box{.depth_used = notion,
                        .side = side,
                        .factor = factor,
                        .grid = sample.grid,
                        .depth = depth,
                        .median_index = region.median_index,
                        .median_curve = region.median_curve,
                        .central_lower = region.lower,
                        .central_upper = region.upper,
                        .fence_lower = f.lower,
                        .fence_upper = f.upper,
                        .outliers = flag_outliers(sample, f, side),
                        .outlier_ids = {}};
  for (auto i : box.outliers) box.outlier_ids.push_back(sample.ids[i]);
  return box;
}

FunctionalBoxplot functional_boxplot(const FunctionalSample& sample, DepthNotion notion, double factor, Side side,
                                     const DepthOptions& options) {
  DepthOptions opts = options;
  opts.side = side;
  return functional_boxplot(sample, compute_depth(sample, notion, opts), notion, factor, side);
}

}  // namespace fdaguard
