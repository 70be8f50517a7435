#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fdaguard/core.hpp"
#include "fdaguard/depth.hpp"
#include "fdaguard/transform.hpp"

namespace fdaguard {

/// Stationary powered-exponential kernel: variance * exp(-(|s - t| / scale)^power).
struct Kernel {
  double variance = 1.0;
  double scale = 1.0;
  double power = 1.0;

  double operator()(double s, double t) const;
};

Matrix covariance_matrix(const Kernel& kernel, const DesignGrid& grid);

/// Lower Cholesky factor of the grid covariance; adds 1e-10 * trace / m to the
/// diagonal once if the plain factorization fails.
Matrix cholesky_factor(const Kernel& kernel, const DesignGrid& grid);

/// count x m matrix of mean + L z draws.
Matrix gp_draws(const Matrix& factor, const Eigen::RowVectorXd& mean, std::size_t count, std::mt19937_64& rng);

FunctionalSample gp_sample(const std::vector<double>& mean, const Kernel& kernel, std::size_t count,
                           const DesignGrid& grid, std::uint64_t seed);

struct ModelSpec {
  int model = 0;  // 0..6
  std::size_t n_clean = 49;
  std::size_t n_outlier = 1;
  DesignGrid grid = DesignGrid::equidistant(30);
  std::uint64_t seed = 1;
};

struct Dataset {
  FunctionalSample sample;
  std::vector<std::size_t> outliers;  // row indices, ascending
  std::vector<std::string> outlier_ids;
};

/// Main-model and contaminating curves for models 0-6, rows shuffled.
Dataset make_dataset(const ModelSpec& spec);

std::string model_name(int model);

/// Pair-agreement ratio between two binary labelings.
double rand_index(const std::vector<bool>& truth, const std::vector<bool>& detected);

struct StudyMetrics {
  double avg_rank = 0.0;
  double pc = 0.0;
  double pf = 0.0;
  double rand_index = 0.0;
  std::size_t replicates = 0;
};

/// raw: one boxplot or ordering on the curves; joint: joint stage ranking over
/// the stage set; combined: union of the stage boxplots.
enum class MethodMode { Raw, Joint, Combined };

struct Method {
  DepthNotion depth = DepthNotion::Linf;
  MethodMode mode = MethodMode::Raw;
  std::vector<TransformKind> stages = {TransformKind::Identity, TransformKind::Center, TransformKind::Difference};

  /// "DQ", "DQ_b", "DQ_c", or the stage set for non-default joint stages.
  std::string name() const;
};

/// Parses "dq", "dq_b", "linf_c", ...
Method parse_method(const std::string& token);

/// Each stage transform applied directly to the raw curves: t1 centers, t2
/// normalizes the centered curves, d1/d2 difference the raw curves.
std::vector<FunctionalSample> stage_set(const FunctionalSample& sample, const std::vector<TransformKind>& kinds);

struct StudyOptions {
  std::size_t replicates = 500;
  std::size_t n_clean = 49;
  std::size_t n_outlier = 1;
  std::size_t m = 30;
  std::uint64_t seed = 20240101;
  unsigned threads = 1;
  double factor = 1.5;
  DepthOptions depth_options;
};

struct StudyTable {
  std::string kind;  // "rank", "detection" or "transform"
  std::vector<int> models;
  std::vector<std::string> methods;
  std::vector<std::vector<StudyMetrics>> cells;  // [method][model]
};

/// Rank of a contaminating curve (1 = most extreme) under `method`.
std::vector<double> outlier_ranks(const Dataset& data, const Method& method, const DepthOptions& options = {});

/// Curves flagged by `method` (raw or combined).
std::vector<std::size_t> detect(const FunctionalSample& sample, const Method& method, double factor,
                                const DepthOptions& options = {});

StudyMetrics score_detection(std::size_t n, const std::vector<std::size_t>& truth,
                             const std::vector<std::size_t>& flagged);

StudyTable rank_study(const std::vector<int>& models, const std::vector<Method>& methods,
                      const StudyOptions& options);

StudyTable detection_study(const std::vector<int>& models, const std::vector<Method>& methods,
                           const StudyOptions& options);

/// Joint rankings over each stage set for every depth notion.
StudyTable transform_comparison_study(const std::vector<int>& models,
                                      const std::vector<std::vector<TransformKind>>& sets,
                                      const std::vector<DepthNotion>& depths, const StudyOptions& options);

}  // namespace fdaguard
