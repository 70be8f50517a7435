#include "fdaguard/depth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fdaguard {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailProbability = 0.025;

void require(bool ok, const char* message) {
  if (!ok) throw Error(message);
}

}  // namespace

std::string to_string(DepthNotion notion) {
  switch (notion) {
    case DepthNotion::Mbd: return "mbd";
    case DepthNotion::Fd2: return "fd2";
    case DepthNotion::Linf: return "linf";
    case DepthNotion::Rmd: return "rmd";
    case DepthNotion::Erld: return "erld";
    case DepthNotion::Dq: return "dq";
  }
  return "?";
}

DepthNotion depth_from_string(const std::string& name) {
  for (auto notion : all_depth_notions())
    if (to_string(notion) == name) return notion;
  throw Error("unknown depth notion '" + name + "' (expected mbd, fd2, linf, rmd, erld or dq)");
}

const std::vector<DepthNotion>& all_depth_notions() {
  static const std::vector<DepthNotion> all{DepthNotion::Mbd,  DepthNotion::Fd2,  DepthNotion::Rmd,
                                            DepthNotion::Linf, DepthNotion::Erld, DepthNotion::Dq};
  return all;
}

DepthResult mbd(const FunctionalSample& sample) {
  const std::size_t n = sample.n();
  require(n >= 2, "degenerate sample");
  const RankMatrix ranks = pointwise_ranks(sample, Side::Lower);
  const double nd = static_cast<double>(n);
  const double denom = nd * (nd + 1.0);
  std::vector<double> values(n);
  std::vector<double> row(sample.m());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < sample.m(); ++j) {
      const double r = ranks.raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      row[j] = 2.0 * (nd * r - r * r + r - 1.0) / denom;
    }
    values[i] = integrate(row, sample.grid) / sample.grid.length();
  }
  return DepthResult(std::move(values), Polarity::Depth);
}

double halfspace_depth_2d(double x, double y, std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  require(n == ys.size() && n > 0, "halfspace depth needs a non-empty cloud");
  std::vector<double> dx;
  std::vector<double> dy;
  dx.reserve(n);
  dy.reserve(n);
  std::size_t coincident = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double ux = xs[k] - x;
    const double uy = ys[k] - y;
    if (ux == 0.0 && uy == 0.0) {
      ++coincident;
    } else {
      dx.push_back(ux);
      dy.push_back(uy);
    }
  }
  // The minimal closed halfplane through the point is attained by rotating an
  // open halfplane until its boundary sits just past one of the directions;
  // it then holds exactly the directions in (theta_a, theta_a + pi].
  const std::size_t q = dx.size();
  std::size_t best = q;
  for (std::size_t a = 0; a < q && best > 0; ++a) {
    std::size_t count = 0;
    for (std::size_t k = 0; k < q; ++k) {
      const double cross = dx[a] * dy[k] - dy[a] * dx[k];
      if (cross > 0.0 || (cross == 0.0 && dx[a] * dx[k] + dy[a] * dy[k] < 0.0)) ++count;
    }
    best = std::min(best, count);
  }
  return static_cast<double>(coincident + best) / static_cast<double>(n);
}

DepthResult fd2(const FunctionalSample& sample) {
  const std::size_t n = sample.n();
  const std::size_t m = sample.m();
  require(n >= 3, "fd2 needs at least 3 curves");
  const auto& w = sample.grid.weights();
  std::vector<double> acc(n, 0.0);
  double total = 0.0;
  std::vector<double> xs(n);
  std::vector<double> ys(n);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = j; k < m; ++k) {
      const double weight = w[j] * w[k];
      total += weight;
      for (std::size_t i = 0; i < n; ++i) {
        xs[i] = sample.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        ys[i] = sample.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      }
      for (std::size_t i = 0; i < n; ++i) acc[i] += weight * halfspace_depth_2d(xs[i], ys[i], xs, ys);
    }
  }
  for (auto& v : acc) v /= total;
  return DepthResult(std::move(acc), Polarity::Depth);
}

DepthResult linf_depth(const FunctionalSample& sample) {
  const std::size_t n = sample.n();
  std::vector<double> mean_dist(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) {
      const double d = (sample.values.row(static_cast<Eigen::Index>(i)) - sample.values.row(static_cast<Eigen::Index>(k)))
                           .cwiseAbs()
                           .maxCoeff();
      mean_dist[i] += d;
      mean_dist[k] += d;
    }
  }
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = 1.0 / (1.0 + mean_dist[i] / static_cast<double>(n));
  return DepthResult(std::move(values), Polarity::Depth);
}

namespace {

struct Spread {
  double med;
  double mad;
};

Spread median_mad(std::span<const double> values) {
  const double med = median(values);
  std::vector<double> dev(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) dev[k] = std::abs(values[k] - med);
  return {med, median(dev)};
}

double sdo_from(const Spread& s, double x) {
  if (s.mad == 0.0) return x == s.med ? 0.0 : kInf;
  return std::abs(x - s.med) / s.mad;
}

}  // namespace

double sdo_pointwise(std::span<const double> values, double x) {
  require(values.size() >= 2, "sdo needs at least 2 values");
  return sdo_from(median_mad(values), x);
}

Matrix directional_outlyingness(const FunctionalSample& sample) {
  require(sample.n() >= 2, "directional outlyingness needs at least 2 curves");
  Matrix out(sample.values.rows(), sample.values.cols());
  for (Eigen::Index j = 0; j < sample.values.cols(); ++j) {
    const auto col = col_vector(sample.values, j);
    const Spread s = median_mad(col);
    for (Eigen::Index i = 0; i < sample.values.rows(); ++i) {
      const double x = col[static_cast<std::size_t>(i)];
      const double sign = x > s.med ? 1.0 : (x < s.med ? -1.0 : 0.0);
      out(i, j) = sign == 0.0 ? 0.0 : sign * sdo_from(s, x);
    }
  }
  return out;
}

OutlyingnessDecomposition mo_vo(const FunctionalSample& sample) {
  const Matrix o = directional_outlyingness(sample);
  const double len = sample.grid.length();
  OutlyingnessDecomposition out;
  out.mo.resize(sample.n());
  out.vo.resize(sample.n());
  std::vector<double> row(sample.m());
  for (std::size_t i = 0; i < sample.n(); ++i) {
    const auto r = row_vector(o, static_cast<Eigen::Index>(i));
    bool pos_inf = false;
    bool neg_inf = false;
    for (double v : r) {
      pos_inf |= v == kInf;
      neg_inf |= v == -kInf;
    }
    if (pos_inf || neg_inf) {
      out.mo[i] = (pos_inf && !neg_inf) ? kInf : (neg_inf && !pos_inf ? -kInf : kInf);
      out.vo[i] = kInf;
      continue;
    }
    const double mo = integrate(r, sample.grid) / len;
    for (std::size_t j = 0; j < r.size(); ++j) row[j] = (r[j] - mo) * (r[j] - mo);
    out.mo[i] = mo;
    out.vo[i] = integrate(row, sample.grid) / len;
  }
  return out;
}

OutlyingnessDecomposition rmd_decomposition(const FunctionalSample& sample, const McdOptions& options) {
  const std::size_t n = sample.n();
  require(n >= 6, "rmd needs at least 6 curves");
  OutlyingnessDecomposition dec = mo_vo(sample);
  std::vector<std::size_t> finite;
  for (std::size_t i = 0; i < n; ++i)
    if (std::isfinite(dec.mo[i]) && std::isfinite(dec.vo[i])) finite.push_back(i);
  require(finite.size() >= 6, "degenerate scatter");
  Matrix z(static_cast<Eigen::Index>(finite.size()), 2);
  for (std::size_t r = 0; r < finite.size(); ++r) {
    z(static_cast<Eigen::Index>(r), 0) = dec.mo[finite[r]];
    z(static_cast<Eigen::Index>(r), 1) = dec.vo[finite[r]];
  }
  const std::size_t h = (finite.size() + 3) / 2;
  const MCDEstimate est = mcd(z, h, options);
  const Vector d = mahalanobis_sq(z, est);
  dec.rmd.assign(n, kInf);
  for (std::size_t r = 0; r < finite.size(); ++r) dec.rmd[finite[r]] = d(static_cast<Eigen::Index>(r));
  return dec;
}

DepthResult rmd(const FunctionalSample& sample, const McdOptions& options) {
  return DepthResult(rmd_decomposition(sample, options).rmd, Polarity::Outlyingness);
}

DepthResult erld(const RankMatrix& ranks) {
  const Eigen::Index n = ranks.sided.rows();
  require(n >= 1, "erld needs at least one curve");
  std::vector<std::vector<double>> sorted(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto r = row_vector(ranks.sided, i);
    std::sort(r.begin(), r.end());
    sorted[static_cast<std::size_t>(i)] = std::move(r);
  }
  std::vector<std::size_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return sorted[a] < sorted[b]; });
  std::vector<double> values(static_cast<std::size_t>(n));
  std::size_t first_equal = 0;
  for (std::size_t pos = 0; pos < idx.size(); ++pos) {
    if (pos > 0 && sorted[idx[pos]] != sorted[idx[pos - 1]]) first_equal = pos;
    values[idx[pos]] = static_cast<double>(first_equal) / static_cast<double>(n);
  }
  return DepthResult(std::move(values), Polarity::Depth);
}

DepthResult erld(const Matrix& values, Side side) {
  require(values.rows() >= 2, "erld needs at least 2 curves");
  return erld(pointwise_ranks(values, side));
}

DepthResult dq(const Matrix& values, Side side) {
  const Eigen::Index n = values.rows();
  require(n >= 3, "dq needs at least 3 curves");
  std::vector<double> best(static_cast<std::size_t>(n), -kInf);
  std::vector<bool> any(static_cast<std::size_t>(n), false);
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const auto col = col_vector(values, j);
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
    const double lo = empirical_quantile(col, kTailProbability);
    const double hi = empirical_quantile(col, 1.0 - kTailProbability);
    const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    // Spreads this small relative to the column are rounding noise.
    const double tiny = 1e-12 * (std::abs(mean) + (*mx - *mn));
    const double below = std::abs(mean - lo);
    const double above = std::abs(hi - mean);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = col[static_cast<std::size_t>(i)];
      double den = 0.0;
      double num = 0.0;
      switch (side) {
        case Side::TwoSided:
          if (x >= mean) {
            den = above;
            num = x - mean;
          } else {
            den = below;
            num = mean - x;
          }
          break;
        case Side::Lower:
          den = below;
          num = mean - x;
          break;
        case Side::Upper:
          den = above;
          num = x - mean;
          break;
      }
      if (den <= tiny) continue;
      const auto k = static_cast<std::size_t>(i);
      best[k] = std::max(best[k], num / den);
      any[k] = true;
    }
  }
  for (bool ok : any) require(ok, "degenerate spread");
  return DepthResult(std::move(best), Polarity::Outlyingness);
}

DepthResult compute_depth(const FunctionalSample& sample, DepthNotion notion, const DepthOptions& options) {
  switch (notion) {
    case DepthNotion::Mbd: return mbd(sample);
    case DepthNotion::Fd2: return fd2(sample);
    case DepthNotion::Linf: return linf_depth(sample);
    case DepthNotion::Rmd: return rmd(sample, options.mcd);
    case DepthNotion::Erld: return erld(sample, options.side);
    case DepthNotion::Dq: return dq(sample, options.side);
  }
  throw Error("unknown depth notion");
}

}  // namespace fdaguard
