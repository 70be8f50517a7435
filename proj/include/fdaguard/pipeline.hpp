#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fdaguard/boxplot.hpp"
#include "fdaguard/core.hpp"
#include "fdaguard/depth.hpp"
#include "fdaguard/transform.hpp"

namespace fdaguard {

/// Taxonomy of a flagged curve: the first stage that flagged it.
struct TaxonomyLabel {
  std::size_t stage = 0;
  std::string name;
};

/// Label for outliers first seen at `stage` of the cumulative sequence.
std::string stage_name(const std::vector<TransformStep>& steps, std::size_t stage);

struct StageReport {
  std::size_t index = 0;
  std::string step;  // "t0", "t1", ...
  std::string name;
  /// One boxplot, or one per margin for the magnitude stage of multivariate data.
  std::vector<FunctionalBoxplot> boxplots;
  std::vector<std::size_t> flagged;  // union over the boxplots, ascending
  std::vector<FunctionalSample> curves;  // the curves behind each boxplot
};

struct CurveVerdict {
  std::optional<TaxonomyLabel> label;
  double depth_value = 0.0;        // at the labelling stage, stage 0 for clean curves
  std::optional<Exceedance> exceedance;
  std::optional<double> location;  // design point of the largest exceedance
};

struct OutlierReport {
  std::vector<std::string> ids;
  std::vector<StageReport> stages;
  std::vector<CurveVerdict> curves;

  /// Every flagged curve, ascending.
  std::vector<std::size_t> flagged() const;
  /// Curves whose label is `stage`.
  std::vector<std::size_t> labelled_at(std::size_t stage) const;
};

struct DetectOptions {
  DepthNotion depth = DepthNotion::Linf;
  double factor = 1.5;
  /// Fence side per stage; missing entries default to two-sided, or upper-only
  /// for the stage produced by the outlyingness transform.
  std::vector<Side> sides;
  DepthOptions depth_options;
};

/// Sequential detection: a functional boxplot on every cumulative transform
/// stage, each flagged curve labelled by the earliest stage that caught it.
OutlierReport sequential_detect(const FunctionalSample& sample, const std::vector<TransformStep>& steps,
                                const DetectOptions& options = {});

/// Multivariate variant: steps must be [t0, o, ...]; the magnitude stage runs a
/// boxplot on every margin and unions the flags.
OutlierReport sequential_detect(const MultivariateFunctionalSample& sample, const std::vector<TransformStep>& steps,
                                const DetectOptions& options = {});

enum class JointMeasure { Dq, Erld };

std::string to_string(JointMeasure measure);
JointMeasure joint_measure_from_string(const std::string& name);

/// Joint functional ordering of the per-stage rank vectors.
struct JointRanking {
  Matrix ranks;        // n x K, 1 = most extreme at that stage, ties averaged
  DepthResult measure; // one-sided measure over the rank vectors
  JointMeasure kind = JointMeasure::Dq;
  std::vector<std::vector<double>> sorted_ranks;  // each row ascending
  std::vector<double> extremeness;                // 1 = jointly most extreme, ties averaged
  std::vector<std::size_t> order;                 // most extreme first

  /// Negative when curve a is strictly more extreme than b, zero on a tie.
  int compare(std::size_t a, std::size_t b) const;
};

/// Builds the joint ranking from an n x K matrix of per-stage ranks.
JointRanking joint_rank_from_ranks(const Matrix& stage_ranks, JointMeasure measure);

/// Ranks every stage with `notion` and combines the ranks.
JointRanking joint_rank(const std::vector<FunctionalSample>& stages, DepthNotion notion, JointMeasure measure,
                        const DepthOptions& options = {});
JointRanking joint_rank(const FunctionalSample& sample, const std::vector<TransformStep>& steps, DepthNotion notion,
                        JointMeasure measure = JointMeasure::Dq, const DepthOptions& options = {});

struct EnvelopeOptions {
  std::vector<TransformStep> steps = {TransformStep{}};
  DepthNotion depth = DepthNotion::Dq;
  JointMeasure measure = JointMeasure::Dq;
  double alpha = 0.05;
  DepthOptions depth_options;
};

struct StageEnvelope {
  std::string step;
  DesignGrid grid;
  Curve lower;
  Curve upper;
};

struct EnvelopeTestResult {
  JointRanking ranking;            // row 0 is the observed curve
  double observed_measure = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool rejected = false;
  std::size_t simulations = 0;
  std::vector<std::size_t> envelope_members;  // least extreme curves spanning the envelopes
  std::vector<StageEnvelope> envelopes;
};

/// Monte Carlo global envelope test of `observed` against `nulls` (one row per
/// simulation) using the joint ranking over the transform stages.
EnvelopeTestResult global_envelope_test(const Curve& observed, const Matrix& nulls, const DesignGrid& grid,
                                        const EnvelopeOptions& options = {});

}  // namespace fdaguard
