#include "fdaguard/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace fdaguard {

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::Identity: return "t0";
    case TransformKind::Center: return "t1";
    case TransformKind::Normalize: return "t2";
    case TransformKind::Difference: return "d1";
    case TransformKind::Difference2: return "d2";
    case TransformKind::Register: return "r";
    case TransformKind::Outlyingness: return "o";
  }
  return "?";
}

TransformStep parse_step(const std::string& token) {
  std::string t;
  for (char c : token)
    if (!std::isspace(static_cast<unsigned char>(c))) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  TransformStep step;
  if (t == "t0") step.kind = TransformKind::Identity;
  else if (t == "t1") step.kind = TransformKind::Center;
  else if (t == "t2") step.kind = TransformKind::Normalize;
  else if (t == "d1") step.kind = TransformKind::Difference;
  else if (t == "d2") step.kind = TransformKind::Difference2;
  else if (t == "r") step.kind = TransformKind::Register;
  else if (t == "o") step.kind = TransformKind::Outlyingness;
  else throw Error("unknown transformation '" + token + "' (expected t0, t1, t2, d1, d2, r or o)");
  return step;
}

std::vector<TransformStep> parse_steps(const std::string& list) {
  std::vector<TransformStep> steps;
  std::stringstream ss(list);
  std::string token;
  while (std::getline(ss, token, ',')) steps.push_back(parse_step(token));
  if (steps.empty()) throw Error("empty transformation list");
  return steps;
}

std::string steps_to_string(const std::vector<TransformStep>& steps) {
  std::string out;
  for (const auto& s : steps) {
    if (!out.empty()) out += ',';
    out += to_string(s.kind);
  }
  return out;
}

void validate_steps(const std::vector<TransformStep>& steps, bool multivariate_input) {
  if (steps.empty()) throw Error("empty transformation list");
  int diff_order = 0;
  bool seen_non_identity = false;
  TransformKind previous = TransformKind::Identity;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto kind = steps[k].kind;
    const std::string where = "step " + std::to_string(k + 1) + " (" + to_string(kind) + "): ";
    if (kind == TransformKind::Identity) {
      if (k != 0) throw Error(where + "t0 may only appear as the first step");
      continue;
    }
    if (multivariate_input && !seen_non_identity && kind != TransformKind::Outlyingness)
      throw Error(where + "multivariate input must be reduced by o first");
    if (kind == TransformKind::Outlyingness && seen_non_identity)
      throw Error(where + "o must be the first transformation");
    switch (kind) {
      case TransformKind::Normalize:
        if (previous != TransformKind::Center) throw Error(where + "normalize requires centered input");
        break;
      case TransformKind::Difference: ++diff_order; break;
      case TransformKind::Difference2:
        if (diff_order >= 2) throw Error(where + "curves are already differenced twice");
        diff_order = 2;
        break;
      case TransformKind::Register:
        if (steps[k].penalty != steps[k].penalty) throw Error(where + "invalid registration penalty");
        break;
      default: break;
    }
    previous = kind;
    seen_non_identity = true;
  }
}

FunctionalSample center(const FunctionalSample& sample) {
  Matrix out = sample.values;
  const double len = sample.grid.length();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (out.row(i).minCoeff() == out.row(i).maxCoeff()) {
      out.row(i).setZero();
      continue;
    }
    const double mean = integrate(Eigen::RowVectorXd(out.row(i)), sample.grid) / len;
    out.row(i).array() -= mean;
  }
  return FunctionalSample(sample.grid, std::move(out), sample.ids);
}

FunctionalSample normalize(const FunctionalSample& sample) {
  Matrix out = sample.values;
  std::vector<double> norms(sample.n());
  double largest = 0.0;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const Eigen::RowVectorXd sq = out.row(i).array().square();
    norms[static_cast<std::size_t>(i)] = std::sqrt(integrate(sq, sample.grid));
    largest = std::max(largest, norms[static_cast<std::size_t>(i)]);
  }
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = norms[static_cast<std::size_t>(i)];
    if (!(norm > 1e-12 * largest) || norm == 0.0)
      throw Error("constant curve cannot be normalized (curve '" + sample.ids[static_cast<std::size_t>(i)] + "')");
    out.row(i) /= norm;
  }
  return FunctionalSample(sample.grid, std::move(out), sample.ids);
}

namespace {

FunctionalSample first_difference(const FunctionalSample& sample) {
  const std::size_t m = sample.m();
  if (m < 3) throw Error("difference needs at least 3 design points");
  const auto& t = sample.grid.points();
  std::vector<double> mid(m - 1);
  Matrix out(sample.values.rows(), static_cast<Eigen::Index>(m - 1));
  for (std::size_t j = 0; j + 1 < m; ++j) {
    mid[j] = 0.5 * (t[j] + t[j + 1]);
    const double h = t[j + 1] - t[j];
    out.col(static_cast<Eigen::Index>(j)) =
        (sample.values.col(static_cast<Eigen::Index>(j + 1)) - sample.values.col(static_cast<Eigen::Index>(j))) / h;
  }
  return FunctionalSample(DesignGrid(std::move(mid)), std::move(out), sample.ids);
}

}  // namespace

FunctionalSample difference(const FunctionalSample& sample, int order) {
  if (order != 1 && order != 2) throw Error("difference order must be 1 or 2");
  // The differenced curves must still live on a valid (m >= 2) grid.
  if (sample.m() < static_cast<std::size_t>(order) + 2)
    throw Error("difference of order " + std::to_string(order) + " needs at least " + std::to_string(order + 2) +
                " design points");
  FunctionalSample out = first_difference(sample);
  if (order == 2) out = first_difference(out);
  return out;
}

double default_registration_penalty(const FunctionalSample& sample) {
  const double range = sample.values.maxCoeff() - sample.values.minCoeff();
  return 0.01 * range * range;
}

namespace {

double interpolate(const std::vector<double>& t, const Eigen::RowVectorXd& x, double at) {
  if (at <= t.front()) return x(0);
  if (at >= t.back()) return x(static_cast<Eigen::Index>(t.size() - 1));
  const auto it = std::upper_bound(t.begin(), t.end(), at);
  const auto hi = static_cast<std::size_t>(it - t.begin());
  const std::size_t lo = hi - 1;
  const double frac = (at - t[lo]) / (t[hi] - t[lo]);
  return x(static_cast<Eigen::Index>(lo)) + frac * (x(static_cast<Eigen::Index>(hi)) - x(static_cast<Eigen::Index>(lo)));
}

struct WarpResult {
  std::vector<double> warp;
  Eigen::RowVectorXd values;
};

WarpResult warp_to_template(const std::vector<double>& t, const std::vector<double>& w, const Eigen::RowVectorXd& x,
                            const Eigen::RowVectorXd& tmpl, double penalty) {
  const std::size_t m = t.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto point_cost = [&](std::size_t j, double r, double value) {
    const double e = value - tmpl(static_cast<Eigen::Index>(j));
    const double d = r - t[j];
    return w[j] * (e * e + penalty * d * d);
  };
  // cost[j][k]: best cost with template point j mapped onto curve knot k.
  std::vector<double> cost(m * m, kInf);
  std::vector<std::uint8_t> from(m * m, 0);
  auto at = [m](std::size_t j, std::size_t k) { return j * m + k; };
  cost[at(0, 0)] = point_cost(0, t[0], x(0));
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < m; ++k) {
      const double base = cost[at(j, k)];
      if (base == kInf) continue;
      // 1: diagonal, 2: curve advances two knots, 3: template advances two points
      if (j + 1 < m && k + 1 < m) {
        const double c = base + point_cost(j + 1, t[k + 1], x(static_cast<Eigen::Index>(k + 1)));
        if (c <= cost[at(j + 1, k + 1)]) {
          cost[at(j + 1, k + 1)] = c;
          from[at(j + 1, k + 1)] = 1;
        }
      }
      if (j + 1 < m && k + 2 < m) {
        const double c = base + point_cost(j + 1, t[k + 2], x(static_cast<Eigen::Index>(k + 2)));
        if (c < cost[at(j + 1, k + 2)]) {
          cost[at(j + 1, k + 2)] = c;
          from[at(j + 1, k + 2)] = 2;
        }
      }
      if (j + 2 < m && k + 1 < m) {
        const double frac = (t[j + 1] - t[j]) / (t[j + 2] - t[j]);
        const double r_mid = t[k] + frac * (t[k + 1] - t[k]);
        const double v_mid = x(static_cast<Eigen::Index>(k)) +
                             frac * (x(static_cast<Eigen::Index>(k + 1)) - x(static_cast<Eigen::Index>(k)));
        const double c = base + point_cost(j + 1, r_mid, v_mid) +
                         point_cost(j + 2, t[k + 1], x(static_cast<Eigen::Index>(k + 1)));
        if (c < cost[at(j + 2, k + 1)]) {
          cost[at(j + 2, k + 1)] = c;
          from[at(j + 2, k + 1)] = 3;
        }
      }
    }
  }
  WarpResult out;
  out.warp.assign(m, 0.0);
  out.values.resize(static_cast<Eigen::Index>(m));
  std::size_t j = m - 1;
  std::size_t k = m - 1;
  for (;;) {
    out.warp[j] = t[k];
    out.values(static_cast<Eigen::Index>(j)) = x(static_cast<Eigen::Index>(k));
    if (j == 0) break;
    switch (from[at(j, k)]) {
      case 1: --j; --k; break;
      case 2: --j; k -= 2; break;
      case 3: {
        const double frac = (t[j - 1] - t[j - 2]) / (t[j] - t[j - 2]);
        out.warp[j - 1] = t[k - 1] + frac * (t[k] - t[k - 1]);
        out.values(static_cast<Eigen::Index>(j - 1)) = interpolate(t, x, out.warp[j - 1]);
        j -= 2;
        k -= 1;
        break;
      }
      default: throw Error("registration failed to find a monotone alignment");
    }
  }
  return out;
}

}  // namespace

Registration register_curves(const FunctionalSample& sample, double penalty) {
  if (sample.m() < 3) throw Error("registration needs at least 3 design points");
  if (penalty < 0.0) penalty = default_registration_penalty(sample);
  const auto& t = sample.grid.points();
  const auto& w = sample.grid.weights();
  Eigen::RowVectorXd tmpl(sample.values.cols());
  for (Eigen::Index j = 0; j < sample.values.cols(); ++j) tmpl(j) = median(col_vector(sample.values, j));

  Matrix out(sample.values.rows(), sample.values.cols());
  std::vector<RegistrationMap> maps(sample.n());
  for (Eigen::Index i = 0; i < sample.values.rows(); ++i) {
    const Eigen::RowVectorXd x = sample.values.row(i);
    if (std::isinf(penalty)) {
      maps[static_cast<std::size_t>(i)].warp = t;
      out.row(i) = x;
      continue;
    }
    WarpResult r = warp_to_template(t, w, x, tmpl, penalty);
    out.row(i) = r.values;
    maps[static_cast<std::size_t>(i)].warp = std::move(r.warp);
  }
  return Registration{FunctionalSample(sample.grid, std::move(out), sample.ids), std::move(maps)};
}

Matrix projection_directions(std::size_t d, std::size_t random, std::uint64_t seed) {
  Matrix dirs(static_cast<Eigen::Index>(d + random), static_cast<Eigen::Index>(d));
  dirs.setZero();
  for (std::size_t k = 0; k < d; ++k) dirs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t r = 0; r < random; ++r) {
    Vector u(static_cast<Eigen::Index>(d));
    do {
      for (Eigen::Index k = 0; k < u.size(); ++k) u(k) = normal(rng);
    } while (u.norm() == 0.0);
    dirs.row(static_cast<Eigen::Index>(d + r)) = u.normalized().transpose();
  }
  return dirs;
}

FunctionalSample outlyingness_curve(const MultivariateFunctionalSample& sample, std::size_t directions,
                                    std::uint64_t seed) {
  const std::size_t n = sample.n();
  if (n < 2) throw Error("outlyingness curve needs at least 2 curves");
  const std::size_t d = sample.d();
  const Matrix dirs = projection_directions(d, directions, seed);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(sample.m()));
  Matrix pts(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<double> proj(n);
  std::vector<double> dev(n);
  std::vector<double> best(n);
  std::vector<bool> off_median(n);
  for (std::size_t j = 0; j < sample.m(); ++j) {
    for (std::size_t k = 0; k < d; ++k) pts.col(static_cast<Eigen::Index>(k)) = sample.dims[k].col(static_cast<Eigen::Index>(j));
    std::fill(best.begin(), best.end(), 0.0);
    std::fill(off_median.begin(), off_median.end(), false);
    bool any_regular = false;
    for (Eigen::Index u = 0; u < dirs.rows(); ++u) {
      const Vector p = pts * dirs.row(u).transpose();
      for (std::size_t i = 0; i < n; ++i) proj[i] = p(static_cast<Eigen::Index>(i));
      const double med = median(proj);
      for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(proj[i] - med);
      const double mad = median(dev);
      if (mad == 0.0) {
        for (std::size_t i = 0; i < n; ++i) off_median[i] = off_median[i] || proj[i] != med;
        continue;
      }
      any_regular = true;
      for (std::size_t i = 0; i < n; ++i) best[i] = std::max(best[i], dev[i] / mad);
    }
    for (std::size_t i = 0; i < n; ++i)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = any_regular ? best[i] : (off_median[i] ? kInf : 0.0);
  }
  if (!out.allFinite()) throw Error("outlyingness curve is degenerate: every projection has zero MAD at some design point");
  return FunctionalSample(sample.grid, std::move(out), sample.ids);
}

FunctionalSample apply_step(const FunctionalSample& sample, const TransformStep& step) {
  switch (step.kind) {
    case TransformKind::Identity: return sample;
    case TransformKind::Center: return center(sample);
    case TransformKind::Normalize: return normalize(sample);
    case TransformKind::Difference: return difference(sample, 1);
    case TransformKind::Difference2: return difference(sample, 2);
    case TransformKind::Register: return register_curves(sample, step.penalty).registered;
    case TransformKind::Outlyingness:
      return outlyingness_curve(MultivariateFunctionalSample(sample.grid, {sample.values}, sample.ids), step.directions,
                                step.seed);
  }
  throw Error("unknown transformation");
}

namespace {

std::vector<FunctionalSample> run_steps(FunctionalSample current, const std::vector<TransformStep>& steps,
                                        std::size_t first, int diff_order, std::vector<FunctionalSample> out) {
  for (std::size_t k = first; k < steps.size(); ++k) {
    const auto& step = steps[k];
    try {
      if (step.kind == TransformKind::Difference2) {
        // d2 lifts the cumulative difference order to two.
        current = difference(current, 2 - diff_order);
        diff_order = 2;
      } else {
        current = apply_step(current, step);
        if (step.kind == TransformKind::Difference) ++diff_order;
      }
    } catch (const Error& e) {
      throw Error("step " + std::to_string(k + 1) + " (" + to_string(step.kind) + "): " + e.what());
    }
    out.push_back(current);
  }
  return out;
}

}  // namespace

std::vector<FunctionalSample> apply_sequence(const FunctionalSample& sample, const std::vector<TransformStep>& steps) {
  validate_steps(steps, false);
  return run_steps(sample, steps, 0, 0, {});
}

std::vector<FunctionalSample> apply_sequence(const MultivariateFunctionalSample& sample,
                                             const std::vector<TransformStep>& steps) {
  validate_steps(steps, sample.d() > 1);
  if (steps.front().kind != TransformKind::Outlyingness)
    throw Error("step 1 (" + to_string(steps.front().kind) + "): multivariate input must be reduced by o first");
  FunctionalSample first = outlyingness_curve(sample, steps.front().directions, steps.front().seed);
  std::vector<FunctionalSample> out{first};
  return run_steps(std::move(first), steps, 1, 0, std::move(out));
}

}  // namespace fdaguard
