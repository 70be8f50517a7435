#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "fdaguard/pipeline.hpp"
#include "fdaguard/simgen.hpp"
#include "support.hpp"

using namespace fdaguard;
using fdaguard::testing::constant_curves;
using fdaguard::testing::normal_matrix;

namespace {

FunctionalSample smooth(std::size_t n, std::size_t m, std::uint64_t seed) {
  return gp_sample(std::vector<double>(m, 0.0), Kernel{1.0, 0.3, 2.0}, n, DesignGrid::equidistant(m), seed);
}

Matrix random_ranks(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  Matrix r(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  std::vector<double> perm(n);
  for (std::size_t c = 0; c < k; ++c) {
    std::iota(perm.begin(), perm.end(), 1.0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = perm[i];
  }
  return r;
}

}  // namespace

TEST_CASE("stage names") {
  const auto steps = parse_steps("t0,t1,t2,d1,d2,r");
  CHECK(stage_name(steps, 0) == "magnitude");
  CHECK(stage_name(steps, 1) == "amplitude");
  CHECK(stage_name(steps, 2) == "pattern");
  CHECK(stage_name(steps, 3) == "first-order");
  CHECK(stage_name(steps, 4) == "second-order");
  CHECK(stage_name(steps, 5) == "G_5-shape");
  CHECK(stage_name(parse_steps("t0,d2"), 1) == "second-order");
}

TEST_CASE("earlier labels win") {
  auto s = smooth(30, 25, 4);
  Matrix v = s.values;
  for (Eigen::Index j = 0; j < v.cols(); ++j) v(3, j) = 20.0 + 15.0 * std::sin(12.0 * s.grid[static_cast<std::size_t>(j)]);
  const auto report = sequential_detect(FunctionalSample(s.grid, v), parse_steps("t0,t1"));
  REQUIRE(report.curves[3].label);
  CHECK(report.curves[3].label->stage == 0);
  CHECK(report.curves[3].label->name == "magnitude");
  const auto& s1 = report.stages[1].flagged;
  CHECK(std::find(s1.begin(), s1.end(), 3u) != s1.end());
  CHECK(report.curves[3].exceedance->amount > 0.0);
}

TEST_CASE("model 1 jump shows up after differencing") {
  int late = 0;
  int seen = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto ds = make_dataset(ModelSpec{1, 49, 1, DesignGrid::equidistant(30), seed});
    const auto report = sequential_detect(ds.sample, parse_steps("t0,t1,d1"));
    const std::size_t o = ds.outliers.front();
    const auto& v = report.curves[o];
    if (!v.label) continue;
    ++seen;
    auto in = [&](std::size_t k) {
      const auto& f = report.stages[k].flagged;
      return std::find(f.begin(), f.end(), o) != f.end();
    };
    if (!in(0) && !in(1)) {
      CHECK(v.label->stage == 2);
      CHECK(v.label->name == "first-order");
      ++late;
    }
  }
  CHECK(seen >= 55);
  CHECK(late >= 10);
}

TEST_CASE("identical curves give an empty report") {
  const auto report = sequential_detect(constant_curves({2, 2, 2, 2, 2}, 8), parse_steps("t0,d1"));
  CHECK(report.flagged().empty());
  CHECK(report.stages.size() == 2);
}

TEST_CASE("detection errors carry context") {
  const auto s = smooth(10, 12, 1);
  CHECK_THROWS_AS(sequential_detect(s, parse_steps("t1,t2")), Error);
  CHECK_THROWS_WITH_AS(sequential_detect(constant_curves({1, 2, 3}, 6), parse_steps("t0,t1,t2")),
                       "step 3 (t2): constant curve cannot be normalized (curve '1')", Error);
}

TEST_CASE("taxonomy partition") {
  std::mt19937_64 rng(101);
  const std::vector<std::string> sequences{"t0,t1,t2", "t0,t1,d1", "t0,d1,d2", "t0,d1", "t0,t1,t2,d1,d2", "t0,r,d1"};
  const auto& notions = all_depth_notions();
  std::uniform_real_distribution<double> fac(0.3, 2.0);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 8 + rep % 13;
    const std::size_t m = 6 + rep % 10;
    Matrix v = normal_matrix(n, m, rng);
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      for (Eigen::Index j = 1; j < v.cols(); ++j) v(i, j) = 0.7 * v(i, j - 1) + 0.5 * v(i, j);
    const FunctionalSample s(DesignGrid::equidistant(m), v);
    const auto steps = parse_steps(sequences[static_cast<std::size_t>(rep) % sequences.size()]);
    DetectOptions opt;
    opt.depth = notions[static_cast<std::size_t>(rep) % notions.size()];
    if (opt.depth == DepthNotion::Fd2 && m > 10) opt.depth = DepthNotion::Mbd;
    opt.factor = fac(rng);
    const auto report = sequential_detect(s, steps, opt);
    REQUIRE(report.stages.size() == steps.size());
    std::set<std::size_t> all;
    for (const auto& st : report.stages) all.insert(st.flagged.begin(), st.flagged.end());
    const auto flagged = report.flagged();
    CHECK(std::vector<std::size_t>(all.begin(), all.end()) == flagged);
    std::size_t labelled = 0;
    for (std::size_t k = 0; k < steps.size(); ++k) labelled += report.labelled_at(k).size();
    CHECK(labelled == flagged.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto& verdict = report.curves[i];
      std::size_t first = steps.size();
      for (std::size_t k = 0; k < steps.size() && first == steps.size(); ++k) {
        const auto& f = report.stages[k].flagged;
        if (std::find(f.begin(), f.end(), i) != f.end()) first = k;
      }
      if (first == steps.size()) {
        CHECK_FALSE(verdict.label);
      } else {
        REQUIRE(verdict.label);
        CHECK(verdict.label->stage == first);
        CHECK(verdict.label->name == stage_name(steps, first));
        CHECK(verdict.exceedance->amount > 0.0);
      }
    }
  }
}

TEST_CASE("multivariate detection") {
  std::mt19937_64 rng(7);
  Matrix a = normal_matrix(20, 10, rng);
  Matrix b = normal_matrix(20, 10, rng);
  a.row(5).array() += 30.0;
  b.row(5).array() -= 30.0;
  const MultivariateFunctionalSample ms(DesignGrid::equidistant(10), {a, b}, default_ids(20));
  const auto report = sequential_detect(ms, parse_steps("t0,o"));
  REQUIRE(report.stages.size() == 2);
  CHECK(report.stages[0].boxplots.size() == 2);
  CHECK(report.stages[0].curves.size() == 2);
  REQUIRE(report.curves[5].label);
  CHECK(report.curves[5].label->stage == 0);
  CHECK(report.stages[1].boxplots.front().side == Side::Upper);
  const auto& o = report.stages[1].flagged;
  CHECK(std::find(o.begin(), o.end(), 5u) != o.end());
  CHECK_THROWS_AS(sequential_detect(ms, parse_steps("t0,t1")), Error);
}

TEST_CASE("joint ranking examples") {
  std::mt19937_64 rng(9);
  const FunctionalSample s(DesignGrid::equidistant(12), normal_matrix(15, 12, rng));
  for (auto measure : {JointMeasure::Dq, JointMeasure::Erld}) {
    const auto j = joint_rank(s, parse_steps("t0"), DepthNotion::Mbd, measure);
    CHECK(j.extremeness == mbd(s).extremeness_ranks());
  }

  const Matrix tied = Matrix::Constant(6, 3, 3.5);
  for (auto measure : {JointMeasure::Dq, JointMeasure::Erld}) {
    const auto j = joint_rank_from_ranks(tied, measure);
    for (double e : j.extremeness) CHECK(e == 3.5);
    for (std::size_t i = 1; i < 6; ++i) CHECK(j.compare(0, i) == 0);
  }

  Matrix hand(5, 3);
  hand << 1, 1, 1,
          2, 5, 3,
          3, 2, 5,
          4, 3, 2,
          5, 4, 4;
  for (auto measure : {JointMeasure::Dq, JointMeasure::Erld}) {
    const auto j = joint_rank_from_ranks(hand, measure);
    CHECK(j.order.front() == 0);
    CHECK(j.extremeness[0] == 1.0);
    for (std::size_t i = 1; i < 5; ++i) CHECK(j.compare(0, i) < 0);
  }
  CHECK_THROWS_AS(joint_rank_from_ranks(Matrix::Constant(2, 2, 1.5), JointMeasure::Dq), Error);
  CHECK(joint_measure_from_string("erld") == JointMeasure::Erld);
  CHECK_THROWS_AS(joint_measure_from_string("mbd"), Error);
}

TEST_CASE("joint ordering ignores the order of the stages") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 3 + rep % 30;
    const std::size_t k = 1 + rep % 5;
    const Matrix r = random_ranks(n, k, rng);
    std::vector<Eigen::Index> cols(k);
    std::iota(cols.begin(), cols.end(), 0);
    std::shuffle(cols.begin(), cols.end(), rng);
    Matrix p(r.rows(), r.cols());
    for (std::size_t c = 0; c < k; ++c) p.col(static_cast<Eigen::Index>(c)) = r.col(cols[c]);
    for (auto measure : {JointMeasure::Dq, JointMeasure::Erld}) {
      const auto a = joint_rank_from_ranks(r, measure);
      const auto b = joint_rank_from_ranks(p, measure);
      CHECK(a.extremeness == b.extremeness);
      CHECK(a.order == b.order);
    }
  }
}

TEST_CASE("envelope p-values") {
  const std::size_t s = 1999;
  const auto g = DesignGrid::equidistant(20);
  const Matrix nulls = smooth(s, 20, 3).values;
  Curve far = Curve::Zero(20);
  far.array() += 10.0 * (nulls.maxCoeff() - nulls.minCoeff());
  const auto r = global_envelope_test(far, nulls, g);
  CHECK(r.p_value == 1.0 / 2000.0);
  CHECK(r.p_value == 0.0005);
  CHECK(r.rejected);
  CHECK(r.simulations == s);

  const Matrix small = nulls.topRows(199);
  const auto copy = global_envelope_test(small.row(17), small, g);
  CHECK(copy.p_value >= 2.0 / 200.0);

  EnvelopeOptions joint;
  joint.steps = parse_steps("t0,d1");
  Curve jump = far;
  jump.tail(10).array() += 10.0 * (nulls.maxCoeff() - nulls.minCoeff());
  const auto jr = global_envelope_test(jump, small, g, joint);
  CHECK(jr.envelopes.size() == 2);
  CHECK(jr.envelopes[1].grid.size() == 19);
  CHECK(jr.p_value == 1.0 / 200.0);

  CHECK_THROWS_AS(global_envelope_test(Curve::Zero(19), small, g), Error);
  CHECK_THROWS_AS(global_envelope_test(far, nulls.topRows(10), g), Error);
  EnvelopeOptions bad;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(global_envelope_test(far, small, g, bad), Error);
}

TEST_CASE("envelope p-values are valid under the null") {
  const auto g = DesignGrid::equidistant(15);
  const std::size_t s = 99;
  const int runs = 300;
  std::vector<double> ps;
  for (int r = 0; r < runs; ++r) {
    const Matrix all = smooth(s + 1, 15, derive_seed(77, static_cast<std::uint64_t>(r))).values;
    const auto res = global_envelope_test(all.row(0), all.bottomRows(s), g);
    CHECK(res.p_value >= 1.0 / (s + 1));
    CHECK(res.p_value <= 1.0);
    CHECK(res.rejected == (res.p_value <= 0.05));
    ps.push_back(res.p_value);
  }
  for (double level : {0.01, 0.05, 0.1, 0.2, 0.5}) {
    const double rate = static_cast<double>(std::count_if(ps.begin(), ps.end(), [&](double p) { return p <= level + 1e-12; })) / runs;
    CHECK(rate <= level + 3.0 * std::sqrt(level * (1 - level) / runs) + 1e-12);
  }
}

TEST_CASE("envelope containment matches extremeness") {
  std::mt19937_64 rng(21);
  const std::vector<std::string> sets{"t0", "t0,d1", "t0,t1,d1"};
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t s = 19 + rep % 40;
    const std::size_t m = 5 + rep % 6;
    const auto g = DesignGrid::equidistant(m);
    const Matrix all = normal_matrix(s + 1, m, rng);
    EnvelopeOptions opt;
    opt.steps = parse_steps(sets[static_cast<std::size_t>(rep) % sets.size()]);
    opt.alpha = 0.1;
    const auto res = global_envelope_test(all.row(0), all.bottomRows(static_cast<Eigen::Index>(s)), g, opt);
    const auto stages = apply_sequence(FunctionalSample(g, all), opt.steps);
    const std::size_t extreme = static_cast<std::size_t>(std::floor(opt.alpha * static_cast<double>(s + 1) + 1e-9));
    std::set<std::size_t> top(res.ranking.order.begin(), res.ranking.order.begin() + static_cast<std::ptrdiff_t>(extreme));
    CHECK(res.envelope_members.size() + extreme == s + 1);
    for (std::size_t i = 0; i <= s; ++i) {
      bool outside = false;
      for (std::size_t k = 0; k < stages.size(); ++k)
        for (Eigen::Index j = 0; j < stages[k].values.cols(); ++j) {
          const double x = stages[k].values(static_cast<Eigen::Index>(i), j);
          outside = outside || x < res.envelopes[k].lower(j) || x > res.envelopes[k].upper(j);
        }
      CHECK(outside == (top.count(i) == 1));
    }
  }
}
