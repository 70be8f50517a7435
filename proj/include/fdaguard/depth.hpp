#pragma once

#include <span>
#include <string>
#include <vector>

#include "fdaguard/core.hpp"
#include "fdaguard/mcd.hpp"

namespace fdaguard {

/// The six centrality notions used to order curves.
enum class DepthNotion { Mbd, Fd2, Linf, Rmd, Erld, Dq };

std::string to_string(DepthNotion notion);
DepthNotion depth_from_string(const std::string& name);
const std::vector<DepthNotion>& all_depth_notions();

/// Modified band depth from pointwise ranks.
DepthResult mbd(const FunctionalSample& sample);

/// Exact halfspace (Tukey) depth of (x, y) within the cloud (xs, ys).
double halfspace_depth_2d(double x, double y, std::span<const double> xs, std::span<const double> ys);

/// Second-order integrated depth with halfspace depth on every pair of design points.
DepthResult fd2(const FunctionalSample& sample);

/// Inverse of one plus the mean sup-distance to the sample (self included).
DepthResult linf_depth(const FunctionalSample& sample);

/// |x - median| / MAD. A zero MAD yields 0 at the median and +inf elsewhere.
double sdo_pointwise(std::span<const double> values, double x);

/// Signed pointwise Stahel-Donoho outlyingness, one row per curve.
Matrix directional_outlyingness(const FunctionalSample& sample);

struct OutlyingnessDecomposition {
  std::vector<double> mo;
  std::vector<double> vo;
  std::vector<double> rmd;  // filled by rmd()
};

/// Mean and variation of the directional outlyingness curves. Curves touching
/// the infinite sentinel get mo = +/-inf and vo = +inf.
OutlyingnessDecomposition mo_vo(const FunctionalSample& sample);

/// Robust Mahalanobis distance of (mo, vo) under an MCD fit; outlyingness polarity.
DepthResult rmd(const FunctionalSample& sample, const McdOptions& options = {});
OutlyingnessDecomposition rmd_decomposition(const FunctionalSample& sample, const McdOptions& options = {});

/// Extreme rank length depth on arbitrary rows (small value = extreme).
DepthResult erld(const Matrix& values, Side side);
DepthResult erld(const RankMatrix& ranks);
inline DepthResult erld(const FunctionalSample& sample, Side side) { return erld(sample.values, side); }

/// Directional quantile outlyingness on arbitrary rows.
DepthResult dq(const Matrix& values, Side side);
inline DepthResult dq(const FunctionalSample& sample, Side side) { return dq(sample.values, side); }

struct DepthOptions {
  Side side = Side::TwoSided;  // used by ERLD and DQ
  McdOptions mcd;
};

DepthResult compute_depth(const FunctionalSample& sample, DepthNotion notion, const DepthOptions& options = {});

}  // namespace fdaguard
