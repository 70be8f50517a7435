#include "fdaguard/mcd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace fdaguard {

namespace {

struct SubsetFit {
  Vector location;
  Matrix scatter;
  double log_det = -std::numeric_limits<double>::infinity();
  bool degenerate = true;
};

SubsetFit fit_subset(const Matrix& points, const std::vector<std::size_t>& subset) {
  const Eigen::Index p = points.cols();
  const auto h = static_cast<Eigen::Index>(subset.size());
  SubsetFit fit;
  fit.location = Vector::Zero(p);
  for (auto i : subset) fit.location += points.row(static_cast<Eigen::Index>(i)).transpose();
  fit.location /= static_cast<double>(h);
  Matrix centered(h, p);
  for (Eigen::Index r = 0; r < h; ++r)
    centered.row(r) = points.row(static_cast<Eigen::Index>(subset[static_cast<std::size_t>(r)])) - fit.location.transpose();
  fit.scatter = centered.transpose() * centered / static_cast<double>(h);

  // The QR factor of the centered data keeps its precision when one point is
  // far away, where the eigenvalues of the scatter would not.
  const Eigen::ColPivHouseholderQR<Matrix> qr(centered);
  if (h < p) return fit;
  const Vector diag = qr.matrixR().diagonal().cwiseAbs();
  const double top = diag.maxCoeff();
  if (!(top > 0.0) || diag.minCoeff() <= 1e-13 * top) return fit;
  fit.degenerate = false;
  fit.log_det = 2.0 * diag.array().log().sum() - static_cast<double>(p) * std::log(static_cast<double>(h));
  return fit;
}

std::vector<std::size_t> closest(const Matrix& points, const SubsetFit& fit, std::size_t h) {
  const Eigen::LLT<Matrix> llt(fit.scatter);
  const Eigen::Index n = points.rows();
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector d = points.row(i).transpose() - fit.location;
    dist[static_cast<std::size_t>(i)] = llt.matrixL().solve(d).squaredNorm();
  }
  std::vector<std::size_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  idx.resize(h);
  std::sort(idx.begin(), idx.end());
  return idx;
}

MCDEstimate to_estimate(SubsetFit fit, std::vector<std::size_t> support) {
  if (fit.degenerate) throw Error("degenerate scatter");
  MCDEstimate est;
  est.location = std::move(fit.location);
  est.scatter = std::move(fit.scatter);
  est.support = std::move(support);
  est.log_det = fit.log_det;
  return est;
}

void check_args(const Matrix& points, std::size_t h) {
  const auto n = static_cast<std::size_t>(points.rows());
  const auto p = static_cast<std::size_t>(points.cols());
  if (p < 1) throw Error("mcd needs at least one variable");
  if (!(h >= p + 1 && h < n)) throw Error("mcd requires n > h >= p + 1");
  if (!points.allFinite()) throw Error("mcd input contains non-finite values");
}

}  // namespace

MCDEstimate mcd_exhaustive(const Matrix& points, std::size_t h) {
  check_args(points, h);
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(h), true);

  SubsetFit best;
  std::vector<std::size_t> best_subset;
  bool have = false;
  std::vector<std::size_t> subset;
  subset.reserve(h);
  do {
    subset.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i]) subset.push_back(i);
    SubsetFit fit = fit_subset(points, subset);
    // A singular subset is an exact fit and beats everything else.
    if (fit.degenerate) throw Error("degenerate scatter");
    if (!have || fit.log_det < best.log_det) {
      best = std::move(fit);
      best_subset = subset;
      have = true;
    }
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return to_estimate(std::move(best), std::move(best_subset));
}

MCDEstimate mcd_iterative(const Matrix& points, std::size_t h, const McdOptions& options) {
  check_args(points, h);
  const auto n = static_cast<std::size_t>(points.rows());
  const auto p = static_cast<std::size_t>(points.cols());
  std::mt19937_64 rng(options.seed);

  SubsetFit best;
  std::vector<std::size_t> best_subset;
  bool have = false;
  std::vector<std::size_t> perm(n);

  for (std::size_t start = 0; start < std::max<std::size_t>(options.starts, 1); ++start) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    // Elemental start of p + 1 points, grown until the scatter is regular.
    std::size_t size = p + 1;
    std::vector<std::size_t> subset(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(size));
    SubsetFit fit = fit_subset(points, subset);
    while (fit.degenerate && size < n) {
      subset.push_back(perm[size++]);
      fit = fit_subset(points, subset);
    }
    if (fit.degenerate) throw Error("degenerate scatter");

    std::vector<std::size_t> current;
    double last = std::numeric_limits<double>::infinity();
    for (std::size_t step = 0; step < options.max_csteps; ++step) {
      std::vector<std::size_t> next = closest(points, fit, h);
      if (next == current) break;
      SubsetFit refit = fit_subset(points, next);
      if (refit.degenerate) throw Error("degenerate scatter");
      current = std::move(next);
      fit = std::move(refit);
      if (!(fit.log_det < last)) break;
      last = fit.log_det;
    }
    if (!have || fit.log_det < best.log_det - 1e-12) {
      best = fit;
      best_subset = current;
      have = true;
    }
  }
  return to_estimate(std::move(best), std::move(best_subset));
}

MCDEstimate mcd(const Matrix& points, std::size_t h, const McdOptions& options) {
  if (static_cast<std::size_t>(points.rows()) <= options.exhaustive_limit) return mcd_exhaustive(points, h);
  return mcd_iterative(points, h, options);
}

Vector mahalanobis_sq(const Matrix& points, const MCDEstimate& estimate) {
  const Eigen::LLT<Matrix> llt(estimate.scatter);
  Vector out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Vector d = points.row(i).transpose() - estimate.location;
    out(i) = llt.matrixL().solve(d).squaredNorm();
  }
  return out;
}

}  // namespace fdaguard
