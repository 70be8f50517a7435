#include "fdaguard/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include <Eigen/Cholesky>

#include "fdaguard/boxplot.hpp"
#include "fdaguard/pipeline.hpp"

namespace fdaguard {

double Kernel::operator()(double s, double t) const {
  return variance * std::exp(-std::pow(std::abs(s - t) / scale, power));
}

Matrix covariance_matrix(const Kernel& kernel, const DesignGrid& grid) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  Matrix cov(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      cov(a, b) = kernel(grid[static_cast<std::size_t>(a)], grid[static_cast<std::size_t>(b)]);
  return cov;
}

Matrix cholesky_factor(const Kernel& kernel, const DesignGrid& grid) {
  if (!(kernel.variance > 0.0 && kernel.scale > 0.0 && kernel.power > 0.0 && kernel.power <= 2.0))
    throw Error("kernel needs positive variance and scale and power in (0, 2]");
  Matrix cov = covariance_matrix(kernel, grid);
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += 1e-10 * cov.trace() / static_cast<double>(cov.rows());
    llt.compute(cov);
    if (llt.info() != Eigen::Success) throw Error("covariance factorization failed after jitter");
  }
  return llt.matrixL();
}

Matrix gp_draws(const Matrix& factor, const Eigen::RowVectorXd& mean, std::size_t count, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const Eigen::Index m = factor.rows();
  Matrix out(static_cast<Eigen::Index>(count), m);
  Vector z(m);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < m; ++j) z(j) = normal(rng);
    out.row(i) = mean + (factor * z).transpose();
  }
  return out;
}

FunctionalSample gp_sample(const std::vector<double>& mean, const Kernel& kernel, std::size_t count,
                           const DesignGrid& grid, std::uint64_t seed) {
  if (mean.size() != grid.size()) throw Error("mean length does not match the grid");
  if (count == 0) throw Error("need at least one curve");
  std::mt19937_64 rng(seed);
  const Eigen::RowVectorXd mu = Eigen::Map<const Eigen::RowVectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  return FunctionalSample(grid, gp_draws(cholesky_factor(kernel, grid), mu, count, rng));
}

namespace {

Eigen::RowVectorXd on_grid(const DesignGrid& grid, const auto& f) {
  Eigen::RowVectorXd out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t j = 0; j < grid.size(); ++j) out(static_cast<Eigen::Index>(j)) = f(grid[j]);
  return out;
}

const Kernel kGamma0{1.0, 1.0, 1.0};
const Kernel kGamma1{1.0, 1.0, 2.0};
const Kernel kGamma1Tilde{1.0, 1.0, 0.2};
const Kernel kGamma2{0.3, 0.3, 1.0};
const Kernel kGamma3{0.1, 0.3, 1.0};

Matrix main_curves(int model, std::size_t count, const DesignGrid& grid, std::mt19937_64& rng) {
  const auto linear = on_grid(grid, [](double t) { return 4.0 * t; });
  switch (model) {
    case 0:
    case 1:
    case 2: return gp_draws(cholesky_factor(kGamma0, grid), linear, count, rng);
    case 3: return gp_draws(cholesky_factor(kGamma1, grid), linear, count, rng);
    case 4: {
      const auto trend = on_grid(grid, [](double t) { return 30.0 * t * std::pow(1.0 - t, 1.5); });
      return gp_draws(cholesky_factor(kGamma2, grid), trend, count, rng);
    }
    case 5: {
      const Matrix L = cholesky_factor(kGamma3, grid);
      std::normal_distribution<double> a_dist(0.0, 2.0);
      std::exponential_distribution<double> b_dist(1.0);
      Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(grid.size()));
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double a = a_dist(rng);
        const double b = b_dist(rng);
        out.row(i) = gp_draws(L, on_grid(grid, [&](double t) { return a + b * std::atan(t); }), 1, rng);
      }
      return out;
    }
    case 6: {
      std::uniform_real_distribution<double> u(0.0, 0.1);
      Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(grid.size()));
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double c = u(rng);
        const double s = u(rng);
        out.row(i) = on_grid(grid, [&](double t) {
          return c * std::cos(2.0 * std::numbers::pi * t) + s * std::sin(2.0 * std::numbers::pi * t);
        });
      }
      return out;
    }
    default: throw Error("unknown model " + std::to_string(model) + " (expected 0-6)");
  }
}

Matrix contaminant_curves(int model, std::size_t count, const DesignGrid& grid, std::mt19937_64& rng) {
  const auto linear = on_grid(grid, [](double t) { return 4.0 * t; });
  Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(grid.size()));
  switch (model) {
    case 1:
    case 2: {
      const Matrix L = cholesky_factor(kGamma0, grid);
      std::uniform_real_distribution<double> u(0.0, model == 1 ? 1.0 : 0.96);
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double at = u(rng);
        const auto mean = on_grid(grid, [&](double t) {
          const bool on = model == 1 ? t > at : (at <= t && t <= at + 0.04);
          return 4.0 * t + (on ? 3.0 : 0.0);
        });
        out.row(i) = gp_draws(L, mean, 1, rng);
      }
      return out;
    }
    case 3: return gp_draws(cholesky_factor(kGamma1Tilde, grid), linear, count, rng);
    case 4: {
      const auto trend = on_grid(grid, [](double t) { return 30.0 * (1.0 - t) * std::pow(t, 1.5); });
      return gp_draws(cholesky_factor(kGamma2, grid), trend, count, rng);
    }
    case 5: {
      const auto trend = on_grid(grid, [](double t) { return 1.0 - 2.0 * std::atan(t); });
      return gp_draws(cholesky_factor(kGamma3, grid), trend, count, rng);
    }
    case 6: {
      std::uniform_real_distribution<double> u(0.1, 0.12);
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double c = u(rng);
        const double s = u(rng);
        out.row(i) = on_grid(grid, [&](double t) {
          return c * std::cos(2.0 * std::numbers::pi * t) + s * std::sin(2.0 * std::numbers::pi * t);
        });
      }
      return out;
    }
    case 0: throw Error("model 0 has no contaminating model");
    default: throw Error("unknown model " + std::to_string(model) + " (expected 0-6)");
  }
}

}  // namespace

std::string model_name(int model) {
  static const char* names[] = {"clean", "jump", "peak", "covariance", "phase", "slope", "oscillation"};
  if (model < 0 || model > 6) throw Error("unknown model " + std::to_string(model) + " (expected 0-6)");
  return names[model];
}

Dataset make_dataset(const ModelSpec& spec) {
  if (spec.model < 0 || spec.model > 6) throw Error("unknown model " + std::to_string(spec.model) + " (expected 0-6)");
  const std::size_t n = spec.n_clean + spec.n_outlier;
  if (n == 0) throw Error("dataset needs at least one curve");
  std::mt19937_64 rng(spec.seed);
  Matrix pooled(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.grid.size()));
  if (spec.n_clean > 0) pooled.topRows(static_cast<Eigen::Index>(spec.n_clean)) = main_curves(spec.model, spec.n_clean, spec.grid, rng);
  if (spec.n_outlier > 0)
    pooled.bottomRows(static_cast<Eigen::Index>(spec.n_outlier)) =
        contaminant_curves(spec.model, spec.n_outlier, spec.grid, rng);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix values(pooled.rows(), pooled.cols());
  std::vector<std::size_t> outliers;
  for (std::size_t r = 0; r < n; ++r) {
    values.row(static_cast<Eigen::Index>(r)) = pooled.row(static_cast<Eigen::Index>(perm[r]));
    if (perm[r] >= spec.n_clean) outliers.push_back(r);
  }
  Dataset out{FunctionalSample(spec.grid, std::move(values)), std::move(outliers), {}};
  for (auto i : out.outliers) out.outlier_ids.push_back(out.sample.ids[i]);
  return out;
}

double rand_index(const std::vector<bool>& truth, const std::vector<bool>& detected) {
  if (truth.size() != detected.size()) throw Error("labelings differ in length");
  const std::size_t n = truth.size();
  if (n < 2) return 1.0;
  double counts[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < n; ++i) counts[truth[i]][detected[i]] += 1.0;
  auto pairs = [](double k) { return 0.5 * k * (k - 1.0); };
  double same_both = 0.0;
  for (auto& row : counts)
    for (double c : row) same_both += pairs(c);
  const double same_truth = pairs(counts[0][0] + counts[0][1]) + pairs(counts[1][0] + counts[1][1]);
  const double same_detected = pairs(counts[0][0] + counts[1][0]) + pairs(counts[0][1] + counts[1][1]);
  const double total = pairs(static_cast<double>(n));
  const double different_both = total - same_truth - same_detected + same_both;
  return (same_both + different_both) / total;
}

namespace {

std::string display_name(DepthNotion notion) {
  switch (notion) {
    case DepthNotion::Mbd: return "MBD";
    case DepthNotion::Fd2: return "FD2";
    case DepthNotion::Linf: return "LinfD";
    case DepthNotion::Rmd: return "RMD";
    case DepthNotion::Erld: return "ERLD";
    case DepthNotion::Dq: return "DQ";
  }
  return "?";
}

const std::vector<TransformKind> kDefaultStages{TransformKind::Identity, TransformKind::Center,
                                                TransformKind::Difference};

std::string stage_list(const std::vector<TransformKind>& kinds) {
  std::string out;
  for (auto k : kinds) out += (out.empty() ? "" : ",") + to_string(k);
  return out;
}

}  // namespace

std::string Method::name() const {
  const std::string base = display_name(depth);
  switch (mode) {
    case MethodMode::Raw: return base;
    case MethodMode::Joint:
      return stages == kDefaultStages ? base + "_b" : "{" + stage_list(stages) + "} " + base;
    case MethodMode::Combined:
      return stages == kDefaultStages ? base + "_c" : "{" + stage_list(stages) + "} " + base + "_c";
  }
  return base;
}

Method parse_method(const std::string& token) {
  Method method;
  std::string base = token;
  if (token.size() > 2 && token[token.size() - 2] == '_') {
    const char suffix = token.back();
    if (suffix == 'b') method.mode = MethodMode::Joint;
    else if (suffix == 'c') method.mode = MethodMode::Combined;
    else throw Error("unknown method suffix in '" + token + "' (expected _b or _c)");
    base = token.substr(0, token.size() - 2);
  }
  method.depth = depth_from_string(base);
  return method;
}

std::vector<FunctionalSample> stage_set(const FunctionalSample& sample, const std::vector<TransformKind>& kinds) {
  std::vector<FunctionalSample> out;
  out.reserve(kinds.size());
  for (auto kind : kinds) {
    switch (kind) {
      case TransformKind::Identity: out.push_back(sample); break;
      case TransformKind::Center: out.push_back(center(sample)); break;
      case TransformKind::Normalize: out.push_back(normalize(center(sample))); break;
      case TransformKind::Difference: out.push_back(difference(sample, 1)); break;
      case TransformKind::Difference2: out.push_back(difference(sample, 2)); break;
      case TransformKind::Register:
        out.push_back(register_curves(sample, default_registration_penalty(sample)).registered);
        break;
      case TransformKind::Outlyingness: throw Error("the outlyingness transform needs multivariate curves");
    }
  }
  return out;
}

std::vector<double> outlier_ranks(const Dataset& data, const Method& method, const DepthOptions& options) {
  std::vector<double> extremeness;
  switch (method.mode) {
    case MethodMode::Raw: extremeness = compute_depth(data.sample, method.depth, options).extremeness_ranks(); break;
    case MethodMode::Joint:
      extremeness = joint_rank(stage_set(data.sample, method.stages), method.depth, JointMeasure::Dq, options).extremeness;
      break;
    case MethodMode::Combined: throw Error("combined methods detect outliers but do not rank them");
  }
  std::vector<double> out;
  for (auto i : data.outliers) out.push_back(extremeness[i]);
  return out;
}

std::vector<std::size_t> detect(const FunctionalSample& sample, const Method& method, double factor,
                                const DepthOptions& options) {
  switch (method.mode) {
    case MethodMode::Raw: return functional_boxplot(sample, method.depth, factor, Side::TwoSided, options).outliers;
    case MethodMode::Combined: {
      std::set<std::size_t> flagged;
      for (const auto& stage : stage_set(sample, method.stages)) {
        const auto box = functional_boxplot(stage, method.depth, factor, Side::TwoSided, options);
        flagged.insert(box.outliers.begin(), box.outliers.end());
      }
      return {flagged.begin(), flagged.end()};
    }
    case MethodMode::Joint: throw Error("joint methods rank curves but do not detect outliers");
  }
  return {};
}

StudyMetrics score_detection(std::size_t n, const std::vector<std::size_t>& truth,
                             const std::vector<std::size_t>& flagged) {
  std::vector<bool> is_true(n, false);
  std::vector<bool> is_flagged(n, false);
  for (auto i : truth) is_true.at(i) = true;
  for (auto i : flagged) is_flagged.at(i) = true;
  std::size_t correct = 0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_flagged[i] && is_true[i]) ++correct;
    if (is_flagged[i] && !is_true[i]) ++wrong;
  }
  StudyMetrics out;
  const std::size_t n_true = truth.size();
  out.pc = n_true == 0 ? std::nan("") : static_cast<double>(correct) / static_cast<double>(n_true);
  out.pf = n_true == n ? std::nan("") : static_cast<double>(wrong) / static_cast<double>(n - n_true);
  out.rand_index = rand_index(is_true, is_flagged);
  out.replicates = 1;
  return out;
}

namespace {

void check_study(const std::vector<int>& models, std::size_t methods, const StudyOptions& options) {
  if (options.replicates == 0) throw Error("replicates must be positive");
  if (models.empty() || methods == 0) throw Error("study needs at least one model and one method");
  for (int model : models)
    if (model < 0 || model > 6) throw Error("unknown model " + std::to_string(model) + " (expected 0-6)");
  if (options.m < 4) throw Error("study grids need at least 4 points");
}

Dataset replicate_dataset(int model, std::size_t r, const StudyOptions& options) {
  ModelSpec spec{.model = model,
                 .n_clean = options.n_clean,
                 .n_outlier = options.n_outlier,
                 .grid = DesignGrid::equidistant(options.m),
                 .seed = derive_seed(options.seed, static_cast<std::uint64_t>(model), r)};
  return make_dataset(spec);
}

// Averages per-replicate metrics, skipping undefined (NaN) entries.
StudyMetrics average(const std::vector<StudyMetrics>& runs) {
  StudyMetrics out;
  auto mean = [&](auto field) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : runs)
      if (!std::isnan(r.*field)) {
        sum += r.*field;
        ++count;
      }
    return count ? sum / static_cast<double>(count) : std::nan("");
  };
  out.avg_rank = mean(&StudyMetrics::avg_rank);
  out.pc = mean(&StudyMetrics::pc);
  out.pf = mean(&StudyMetrics::pf);
  out.rand_index = mean(&StudyMetrics::rand_index);
  out.replicates = runs.size();
  return out;
}

template <typename Body>
StudyTable run_study(const std::string& kind, const std::vector<int>& models, const std::vector<Method>& methods,
                     const StudyOptions& options, Body body) {
  check_study(models, methods.size(), options);
  StudyTable table;
  table.kind = kind;
  table.models = models;
  for (const auto& m : methods) table.methods.push_back(m.name());
  table.cells.assign(methods.size(), std::vector<StudyMetrics>(models.size()));
  for (std::size_t c = 0; c < models.size(); ++c) {
    // runs[r][method]
    std::vector<std::vector<StudyMetrics>> runs(options.replicates);
    parallel_for(options.replicates, options.threads, [&](std::size_t r) {
      const Dataset data = replicate_dataset(models[c], r, options);
      runs[r].resize(methods.size());
      for (std::size_t k = 0; k < methods.size(); ++k) runs[r][k] = body(data, methods[k]);
    });
    for (std::size_t k = 0; k < methods.size(); ++k) {
      std::vector<StudyMetrics> column;
      column.reserve(runs.size());
      for (const auto& run : runs) column.push_back(run[k]);
      table.cells[k][c] = average(column);
    }
  }
  return table;
}

StudyMetrics rank_metrics(const Dataset& data, const Method& method, const DepthOptions& options) {
  StudyMetrics out;
  const auto ranks = outlier_ranks(data, method, options);
  out.avg_rank = ranks.empty() ? std::nan("") : std::accumulate(ranks.begin(), ranks.end(), 0.0) / static_cast<double>(ranks.size());
  out.pc = out.pf = out.rand_index = std::nan("");
  out.replicates = 1;
  return out;
}

}  // namespace

StudyTable rank_study(const std::vector<int>& models, const std::vector<Method>& methods,
                      const StudyOptions& options) {
  if (options.n_outlier == 0) throw Error("rank study needs at least one outlier");
  for (const auto& m : methods)
    if (m.mode == MethodMode::Combined) throw Error("rank study takes raw or joint methods");
  return run_study("rank", models, methods, options,
                   [&](const Dataset& data, const Method& method) { return rank_metrics(data, method, options.depth_options); });
}

StudyTable detection_study(const std::vector<int>& models, const std::vector<Method>& methods,
                           const StudyOptions& options) {
  for (const auto& m : methods)
    if (m.mode == MethodMode::Joint) throw Error("detection study takes raw or combined methods");
  return run_study("detection", models, methods, options, [&](const Dataset& data, const Method& method) {
    const auto flagged = detect(data.sample, method, options.factor, options.depth_options);
    auto metrics = score_detection(data.sample.n(), data.outliers, flagged);
    metrics.avg_rank = std::nan("");
    return metrics;
  });
}

StudyTable transform_comparison_study(const std::vector<int>& models,
                                      const std::vector<std::vector<TransformKind>>& sets,
                                      const std::vector<DepthNotion>& depths, const StudyOptions& options) {
  std::vector<Method> methods;
  for (const auto& set : sets) {
    if (set.empty()) throw Error("empty transformation set");
    for (auto depth : depths) methods.push_back(Method{depth, MethodMode::Joint, set});
  }
  auto table = rank_study(models, methods, options);
  table.kind = "transform";
  for (std::size_t k = 0; k < methods.size(); ++k)
    table.methods[k] = "{" + stage_list(methods[k].stages) + "} " + display_name(methods[k].depth);
  return table;
}

}  // namespace fdaguard
