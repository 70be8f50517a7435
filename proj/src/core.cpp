#include "fdaguard/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

namespace fdaguard {

DesignGrid::DesignGrid(std::vector<double> points) : points_(std::move(points)) {
  const std::size_t m = points_.size();
  if (m < 2) throw Error("design grid needs at least 2 points");
  for (std::size_t j = 0; j < m; ++j) {
    if (!std::isfinite(points_[j])) throw Error("design grid contains a non-finite point");
    if (j > 0 && !(points_[j] > points_[j - 1]))
      throw Error("design grid must be strictly increasing");
  }
  weights_.resize(m);
  weights_[0] = 0.5 * (points_[1] - points_[0]);
  weights_[m - 1] = 0.5 * (points_[m - 1] - points_[m - 2]);
  for (std::size_t j = 1; j + 1 < m; ++j) weights_[j] = 0.5 * (points_[j + 1] - points_[j - 1]);
}

DesignGrid DesignGrid::equidistant(std::size_t m, double lo, double hi) {
  if (m < 2) throw Error("design grid needs at least 2 points");
  std::vector<double> pts(m);
  for (std::size_t j = 0; j < m; ++j)
    pts[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(m - 1);
  return DesignGrid(std::move(pts));
}

std::vector<std::string> default_ids(std::size_t n) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i + 1);
  return ids;
}

namespace {

void check_ids(const std::vector<std::string>& ids, std::size_t n) {
  if (ids.size() != n) throw Error("number of curve ids does not match number of curves");
  std::set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw Error("duplicate curve id '" + id + "'");
}

void check_finite(const Matrix& v) {
  if (!v.allFinite()) throw Error("sample contains non-finite values");
}

}  // namespace

FunctionalSample::FunctionalSample(DesignGrid g, Matrix v, std::vector<std::string> curve_ids)
    : grid(std::move(g)), values(std::move(v)), ids(std::move(curve_ids)) {
  if (values.rows() < 1) throw Error("sample needs at least one curve");
  if (static_cast<std::size_t>(values.cols()) != grid.size())
    throw Error("curve length does not match the design grid");
  check_finite(values);
  if (ids.empty()) ids = default_ids(n());
  check_ids(ids, n());
}

MultivariateFunctionalSample::MultivariateFunctionalSample(DesignGrid g, std::vector<Matrix> d,
                                                           std::vector<std::string> curve_ids)
    : grid(std::move(g)), dims(std::move(d)), ids(std::move(curve_ids)) {
  if (dims.empty()) throw Error("multivariate sample needs at least one dimension");
  for (const auto& mat : dims) {
    if (mat.rows() != dims.front().rows() || static_cast<std::size_t>(mat.cols()) != grid.size())
      throw Error("all dimensions must share the curve count and design grid");
    check_finite(mat);
  }
  if (dims.front().rows() < 1) throw Error("sample needs at least one curve");
  if (ids.empty()) ids = default_ids(n());
  check_ids(ids, n());
}

FunctionalSample MultivariateFunctionalSample::margin(std::size_t k) const {
  return FunctionalSample(grid, dims.at(k), ids);
}

std::string to_string(Side side) {
  switch (side) {
    case Side::Lower: return "lower";
    case Side::Upper: return "upper";
    case Side::TwoSided: return "two-sided";
  }
  return "two-sided";
}

Side side_from_string(const std::string& name) {
  if (name == "lower") return Side::Lower;
  if (name == "upper") return Side::Upper;
  if (name == "two-sided" || name == "both") return Side::TwoSided;
  throw Error("unknown side '" + name + "' (expected lower, upper or two-sided)");
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    // positions i..j share the average of ranks i+1..j+1
    const double r = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

RankMatrix pointwise_ranks(const Matrix& values, Side side) {
  const Eigen::Index n = values.rows();
  if (n < 1) throw Error("pointwise ranks need at least one curve");
  RankMatrix out;
  out.side = side;
  out.raw.resize(n, values.cols());
  out.sided.resize(n, values.cols());
  std::vector<double> col(static_cast<std::size_t>(n));
  const double np1 = static_cast<double>(n) + 1.0;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = values(i, j);
    const auto r = average_ranks(col);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double raw = r[static_cast<std::size_t>(i)];
      out.raw(i, j) = raw;
      switch (side) {
        case Side::Lower: out.sided(i, j) = raw; break;
        case Side::Upper: out.sided(i, j) = np1 - raw; break;
        case Side::TwoSided: out.sided(i, j) = std::min(raw, np1 - raw); break;
      }
    }
  }
  return out;
}

DepthResult::DepthResult(std::vector<double> v, Polarity p) : values(std::move(v)), polarity(p) {
  order.resize(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return deeper(a, b); });
}

bool DepthResult::deeper(std::size_t a, std::size_t b) const {
  const double va = values[a];
  const double vb = values[b];
  return polarity == Polarity::Depth ? va > vb : va < vb;
}

std::vector<double> DepthResult::extremeness_ranks() const {
  // Extremeness grows with outlyingness, or with negated depth.
  std::vector<double> key(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    key[i] = polarity == Polarity::Depth ? values[i] : -values[i];
  return average_ranks(key);
}

double empirical_quantile(std::span<const double> values, double p) {
  if (values.empty()) throw Error("empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw Error("quantile probability must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

double median(std::span<const double> values) { return empirical_quantile(values, 0.5); }

double integrate(std::span<const double> curve, const DesignGrid& grid) {
  if (curve.size() != grid.size()) throw Error("curve length does not match the design grid");
  const auto& w = grid.weights();
  double acc = 0.0;
  for (std::size_t j = 0; j < curve.size(); ++j) acc += w[j] * curve[j];
  return acc;
}

double integrate(const Eigen::Ref<const Eigen::RowVectorXd>& curve, const DesignGrid& grid) {
  return integrate(std::span<const double>(curve.data(), static_cast<std::size_t>(curve.size())), grid);
}

std::vector<double> row_vector(const Matrix& values, Eigen::Index i) {
  std::vector<double> r(static_cast<std::size_t>(values.cols()));
  for (Eigen::Index j = 0; j < values.cols(); ++j) r[static_cast<std::size_t>(j)] = values(i, j);
  return r;
}

std::vector<double> col_vector(const Matrix& values, Eigen::Index j) {
  std::vector<double> c(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) c[static_cast<std::size_t>(i)] = values(i, j);
  return c;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) {
  return splitmix64(splitmix64(seed) ^ (key * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key1, std::uint64_t key2) {
  return derive_seed(derive_seed(seed, key1), key2);
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fdaguard
