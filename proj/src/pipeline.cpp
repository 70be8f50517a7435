#include "fdaguard/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace fdaguard {

std::string stage_name(const std::vector<TransformStep>& steps, std::size_t stage) {
  if (stage == 0) return "magnitude";
  if (stage >= steps.size()) throw Error("stage index out of range");
  int diff_order = 0;
  for (std::size_t k = 1; k <= stage; ++k) {
    if (steps[k].kind == TransformKind::Difference) ++diff_order;
    if (steps[k].kind == TransformKind::Difference2) diff_order = 2;
  }
  switch (steps[stage].kind) {
    case TransformKind::Center: return "amplitude";
    case TransformKind::Normalize: return "pattern";
    case TransformKind::Difference:
    case TransformKind::Difference2:
      if (diff_order == 1) return "first-order";
      if (diff_order == 2) return "second-order";
      break;
    default: break;
  }
  return "G_" + std::to_string(stage) + "-shape";
}

std::vector<std::size_t> OutlierReport::flagged() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < curves.size(); ++i)
    if (curves[i].label) out.push_back(i);
  return out;
}

std::vector<std::size_t> OutlierReport::labelled_at(std::size_t stage) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < curves.size(); ++i)
    if (curves[i].label && curves[i].label->stage == stage) out.push_back(i);
  return out;
}

namespace {

Side stage_side(const DetectOptions& options, const std::vector<TransformStep>& steps, std::size_t stage) {
  if (stage < options.sides.size()) return options.sides[stage];
  return steps[stage].kind == TransformKind::Outlyingness ? Side::Upper : Side::TwoSided;
}

StageReport run_stage(const FunctionalSample& curves, const std::vector<TransformStep>& steps, std::size_t stage,
                      const DetectOptions& options) {
  StageReport report{.index = stage,
                     .step = to_string(steps[stage].kind),
                     .name = stage_name(steps, stage),
                     .boxplots = {},
                     .flagged = {},
                     .curves = {curves}};
  try {
    report.boxplots.push_back(functional_boxplot(curves, options.depth, options.factor,
                                                 stage_side(options, steps, stage), options.depth_options));
  } catch (const Error& e) {
    throw Error("stage " + std::to_string(stage) + " (" + report.step + "): " + e.what());
  }
  report.flagged = report.boxplots.front().outliers;
  return report;
}

void assign_labels(OutlierReport& report) {
  const std::size_t n = report.ids.size();
  report.curves.assign(n, CurveVerdict{});
  for (const auto& stage : report.stages) {
    for (auto i : stage.flagged) {
      auto& verdict = report.curves[i];
      if (verdict.label) continue;
      verdict.label = TaxonomyLabel{stage.index, stage.name};
      // Evidence from the boxplot (margin) with the largest exceedance.
      const FunctionalBoxplot* best = nullptr;
      Exceedance best_ex{-std::numeric_limits<double>::infinity(), 0};
      for (std::size_t b = 0; b < stage.boxplots.size(); ++b) {
        const auto& box = stage.boxplots[b];
        const Fences f{box.fence_lower, box.fence_upper};
        const Exceedance ex = exceedance(stage.curves[b].values.row(static_cast<Eigen::Index>(i)), f, box.side);
        if (!best || ex.amount > best_ex.amount) {
          best = &box;
          best_ex = ex;
        }
      }
      verdict.depth_value = best->depth.values[i];
      verdict.exceedance = best_ex;
      verdict.location = best->grid[best_ex.index];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!report.curves[i].label) report.curves[i].depth_value = report.stages.front().boxplots.front().depth.values[i];
}

}  // namespace

OutlierReport sequential_detect(const FunctionalSample& sample, const std::vector<TransformStep>& steps,
                                const DetectOptions& options) {
  if (steps.empty() || steps.front().kind != TransformKind::Identity)
    throw Error("transformation steps must begin with t0");
  const auto stages = apply_sequence(sample, steps);
  OutlierReport report;
  report.ids = sample.ids;
  for (std::size_t k = 0; k < stages.size(); ++k) report.stages.push_back(run_stage(stages[k], steps, k, options));
  assign_labels(report);
  return report;
}

OutlierReport sequential_detect(const MultivariateFunctionalSample& sample, const std::vector<TransformStep>& steps,
                                const DetectOptions& options) {
  if (sample.d() == 1) return sequential_detect(sample.margin(0), steps, options);
  if (steps.size() < 2 || steps[0].kind != TransformKind::Identity || steps[1].kind != TransformKind::Outlyingness)
    throw Error("multivariate detection needs steps starting with t0,o");
  validate_steps(steps, true);
  OutlierReport report;
  report.ids = sample.ids;

  // Magnitude stage: a boxplot on every margin, results united.
  StageReport magnitude{.index = 0,
                        .step = "t0",
                        .name = stage_name(steps, 0),
                        .boxplots = {},
                        .flagged = {},
                        .curves = {}};
  std::set<std::size_t> flagged;
  const Side side0 = stage_side(options, steps, 0);
  for (std::size_t k = 0; k < sample.d(); ++k) {
    const FunctionalSample margin = sample.margin(k);
    try {
      magnitude.boxplots.push_back(functional_boxplot(margin, options.depth, options.factor, side0, options.depth_options));
    } catch (const Error& e) {
      throw Error("stage 0 (t0, margin " + std::to_string(k + 1) + "): " + e.what());
    }
    flagged.insert(magnitude.boxplots.back().outliers.begin(), magnitude.boxplots.back().outliers.end());
    magnitude.curves.push_back(margin);
  }
  magnitude.flagged.assign(flagged.begin(), flagged.end());

  const std::vector<TransformStep> rest(steps.begin() + 1, steps.end());
  const auto stages = apply_sequence(sample, rest);
  report.stages.push_back(std::move(magnitude));
  for (std::size_t k = 0; k < stages.size(); ++k) report.stages.push_back(run_stage(stages[k], steps, k + 1, options));

  assign_labels(report);
  return report;
}

std::string to_string(JointMeasure measure) { return measure == JointMeasure::Dq ? "dq" : "erld"; }

JointMeasure joint_measure_from_string(const std::string& name) {
  if (name == "dq") return JointMeasure::Dq;
  if (name == "erld") return JointMeasure::Erld;
  throw Error("unknown joint measure '" + name + "' (expected dq or erld)");
}

int JointRanking::compare(std::size_t a, std::size_t b) const {
  const double va = measure.values[a];
  const double vb = measure.values[b];
  if (va != vb) {
    const bool a_more = measure.polarity == Polarity::Outlyingness ? va > vb : va < vb;
    return a_more ? -1 : 1;
  }
  // Equal measures fall back to the lexical order of the sorted rank vectors.
  if (sorted_ranks[a] < sorted_ranks[b]) return -1;
  if (sorted_ranks[b] < sorted_ranks[a]) return 1;
  return 0;
}

JointRanking joint_rank_from_ranks(const Matrix& stage_ranks, JointMeasure measure) {
  const auto n = static_cast<std::size_t>(stage_ranks.rows());
  if (n < 3) throw Error("joint ranking needs at least 3 curves");
  if (stage_ranks.cols() < 1) throw Error("joint ranking needs at least one stage");
  JointRanking out;
  out.ranks = stage_ranks;
  out.kind = measure;
  out.sorted_ranks.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = row_vector(stage_ranks, static_cast<Eigen::Index>(i));
    std::sort(r.begin(), r.end());
    out.sorted_ranks[i] = std::move(r);
  }
  if (measure == JointMeasure::Dq) {
    try {
      out.measure = dq(stage_ranks, Side::Lower);
    } catch (const Error&) {
      // Every stage has zero spread: all rank vectors are tied.
      out.measure = DepthResult(std::vector<double>(n, 0.0), Polarity::Outlyingness);
    }
  } else {
    out.measure = erld(stage_ranks, Side::Lower);
  }

  out.order.resize(n);
  std::iota(out.order.begin(), out.order.end(), 0);
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t a, std::size_t b) { return out.compare(a, b) < 0; });
  out.extremeness.assign(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && out.compare(out.order[j + 1], out.order[i]) == 0) ++j;
    const double r = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) out.extremeness[out.order[k]] = r;
    i = j + 1;
  }
  return out;
}

JointRanking joint_rank(const std::vector<FunctionalSample>& stages, DepthNotion notion, JointMeasure measure,
                        const DepthOptions& options) {
  if (stages.empty()) throw Error("joint ranking needs at least one stage");
  const std::size_t n = stages.front().n();
  Matrix ranks(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(stages.size()));
  for (std::size_t k = 0; k < stages.size(); ++k) {
    if (stages[k].n() != n) throw Error("stages disagree on the number of curves");
    const auto r = compute_depth(stages[k], notion, options).extremeness_ranks();
    for (std::size_t i = 0; i < n; ++i) ranks(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = r[i];
  }
  return joint_rank_from_ranks(ranks, measure);
}

JointRanking joint_rank(const FunctionalSample& sample, const std::vector<TransformStep>& steps, DepthNotion notion,
                        JointMeasure measure, const DepthOptions& options) {
  if (sample.n() < 3) throw Error("joint ranking needs at least 3 curves");
  return joint_rank(apply_sequence(sample, steps), notion, measure, options);
}

namespace {

// ceil/floor that ignore rounding noise in products like 0.95 * 200.
std::size_t robust_ceil(double x) { return static_cast<std::size_t>(std::ceil(x - 1e-9)); }

}  // namespace

EnvelopeTestResult global_envelope_test(const Curve& observed, const Matrix& nulls, const DesignGrid& grid,
                                        const EnvelopeOptions& options) {
  if (static_cast<std::size_t>(observed.size()) != grid.size() || static_cast<std::size_t>(nulls.cols()) != grid.size())
    throw Error("observed and null curves must share the design grid");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  const auto s = static_cast<std::size_t>(nulls.rows());
  if (static_cast<double>(s) < 1.0 / options.alpha - 1.0 - 1e-9)
    throw Error("need at least 1/alpha - 1 null simulations (got " + std::to_string(s) + ")");

  Matrix pooled(static_cast<Eigen::Index>(s + 1), observed.size());
  pooled.row(0) = observed;
  pooled.bottomRows(static_cast<Eigen::Index>(s)) = nulls;
  std::vector<std::string> ids{"observed"};
  for (std::size_t k = 1; k <= s; ++k) ids.push_back("null" + std::to_string(k));
  const FunctionalSample sample(grid, std::move(pooled), std::move(ids));
  const auto stages = apply_sequence(sample, options.steps);

  EnvelopeTestResult out;
  out.ranking = joint_rank(stages, options.depth, options.measure, options.depth_options);
  out.alpha = options.alpha;
  out.simulations = s;
  out.observed_measure = out.ranking.measure.values[0];
  std::size_t at_least_as_extreme = 0;
  for (std::size_t i = 0; i <= s; ++i)
    if (out.ranking.compare(i, 0) <= 0) ++at_least_as_extreme;
  out.p_value = static_cast<double>(at_least_as_extreme) / static_cast<double>(s + 1);
  out.rejected = out.p_value <= options.alpha;

  const std::size_t keep = std::min(s + 1, robust_ceil((1.0 - options.alpha) * static_cast<double>(s + 1)));
  out.envelope_members.assign(out.ranking.order.end() - static_cast<std::ptrdiff_t>(keep), out.ranking.order.end());
  std::sort(out.envelope_members.begin(), out.envelope_members.end());
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const auto& st = stages[k];
    StageEnvelope env{.step = to_string(options.steps[k].kind),
                      .grid = st.grid,
                      .lower = st.values.row(static_cast<Eigen::Index>(out.envelope_members.front())),
                      .upper = st.values.row(static_cast<Eigen::Index>(out.envelope_members.front()))};
    for (auto i : out.envelope_members) {
      env.lower = env.lower.cwiseMin(st.values.row(static_cast<Eigen::Index>(i)));
      env.upper = env.upper.cwiseMax(st.values.row(static_cast<Eigen::Index>(i)));
    }
    out.envelopes.push_back(std::move(env));
  }
  return out;
}

}  // namespace fdaguard
