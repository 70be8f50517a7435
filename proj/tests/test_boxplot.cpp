#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "fdaguard/boxplot.hpp"
#include "fdaguard/simgen.hpp"
#include "support.hpp"

using namespace fdaguard;
using fdaguard::testing::constant_curves;
using fdaguard::testing::normal_matrix;
using fdaguard::testing::random_grid;

namespace {

Curve row(std::initializer_list<double> v) {
  Curve c(static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double x : v) c(j++) = x;
  return c;
}

FunctionalSample gp_curves(std::size_t n, std::size_t m, std::uint64_t seed) {
  return gp_sample(std::vector<double>(m, 0.0), Kernel{1.0, 0.3, 2.0}, n, DesignGrid::equidistant(m), seed);
}

}  // namespace

TEST_CASE("central region examples") {
  const auto four = constant_curves({1, 2, 3, 4});
  const auto r = central_region(four, mbd(four));
  CHECK(r.lower.minCoeff() == 2.0);
  CHECK(r.lower.maxCoeff() == 2.0);
  CHECK(r.upper.minCoeff() == 3.0);
  CHECK(r.upper.maxCoeff() == 3.0);
  CHECK(r.members.size() == 2);

  const auto same = constant_curves({5, 5, 5});
  const auto s = central_region(same, mbd(same));
  CHECK(s.lower == s.median_curve);
  CHECK(s.upper == s.median_curve);

  const auto two = constant_curves({0, 1});
  const auto t = central_region(two, linf_depth(two));
  CHECK(t.members.size() == 1);
  CHECK(t.lower == t.upper);
  CHECK(t.lower == t.median_curve);
}

TEST_CASE("fence examples") {
  const auto f = fences(row({0, 0}), row({1, 1}), 1.5);
  CHECK(f.lower(0) == -1.5);
  CHECK(f.upper(1) == 2.5);
  const auto z = fences(row({0, 1}), row({2, 3}), 0.0);
  CHECK(z.lower == row({0, 1}));
  CHECK(z.upper == row({2, 3}));
  const auto d = fences(row({4, 5}), row({4, 5}), 1.5);
  CHECK(d.lower == row({4, 5}));
  CHECK(d.upper == row({4, 5}));
  CHECK_THROWS_AS(fences(row({0}), row({1}), -1.0), Error);
}

TEST_CASE("exceedance is strict") {
  const Fences f{row({0, 0, 0}), row({1, 1, 1})};
  CHECK(exceedance(row({1, 1, 1}), f, Side::TwoSided).amount == 0.0);
  const auto e = exceedance(row({1, 1.25, 1}), f, Side::TwoSided);
  CHECK(e.amount == 0.25);
  CHECK(e.index == 1);
  CHECK(exceedance(row({-2, 0, 0}), f, Side::Upper).amount <= 0.0);
  CHECK(exceedance(row({-2, 0, 0}), f, Side::Lower).amount == 2.0);

  const auto same = constant_curves({3, 3, 3, 3});
  for (auto notion : {DepthNotion::Mbd, DepthNotion::Linf, DepthNotion::Erld, DepthNotion::Fd2})
    CHECK(functional_boxplot(same, notion).outliers.empty());
}

TEST_CASE("clean model rarely flags anything") {
  int clean = 0;
  const int runs = 200;
  for (int r = 0; r < runs; ++r) {
    const auto ds = make_dataset(ModelSpec{0, 50, 0, DesignGrid::equidistant(30), derive_seed(404, static_cast<std::uint64_t>(r))});
    if (functional_boxplot(ds.sample, DepthNotion::Linf).outliers.empty()) ++clean;
  }
  CHECK(clean >= runs * 9 / 10);
}

TEST_CASE("a far shifted curve is flagged by every notion") {
  auto s = gp_curves(30, 20, 8);
  const double range = s.values.maxCoeff() - s.values.minCoeff();
  Matrix v = s.values;
  v.row(11).array() += 10 * range;
  const FunctionalSample shifted(s.grid, v);
  for (auto notion : all_depth_notions()) {
    const auto box = functional_boxplot(shifted, notion);
    CHECK_MESSAGE(std::find(box.outliers.begin(), box.outliers.end(), 11u) != box.outliers.end(), to_string(notion));
  }
}

TEST_CASE("a huge factor flags nothing") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const FunctionalSample s(random_grid(8, rng), normal_matrix(20, 8, rng));
    for (auto notion : all_depth_notions()) CHECK(functional_boxplot(s, notion, 1e6).outliers.empty());
  }
}

TEST_CASE("flagged set is invariant under increasing affine maps") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  std::uniform_real_distribution<double> shift(-20.0, 20.0);
  const auto& notions = all_depth_notions();
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 8 + rep % 5;
    const std::size_t m = 3 + rep % 6;
    Matrix v = normal_matrix(n, m, rng);
    v.row(rep % static_cast<int>(n)).array() *= 4.0;
    const FunctionalSample s(random_grid(m, rng), v);
    const double a = scale(rng), b = shift(rng);
    const FunctionalSample t(s.grid, (a * v.array() + b).matrix());
    const auto notion = notions[static_cast<std::size_t>(rep) % notions.size()];
    CHECK(functional_boxplot(s, notion).outliers == functional_boxplot(t, notion).outliers);
  }
}

TEST_CASE("outliers shrink as the factor grows and the median is never flagged") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> fac(0.0, 3.0);
  const auto& notions = all_depth_notions();
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 6 + rep % 15;
    const std::size_t m = 2 + rep % 7;
    Matrix v = normal_matrix(n, m, rng);
    if (rep % 3 == 0) v.row(0).array() += 3.0;
    const FunctionalSample s(random_grid(m, rng), v);
    const auto notion = notions[static_cast<std::size_t>(rep) % notions.size()];
    const double f1 = fac(rng);
    const double f2 = f1 + fac(rng);
    const auto small = functional_boxplot(s, notion, f1);
    const auto large = functional_boxplot(s, notion, f2);
    CHECK(std::includes(small.outliers.begin(), small.outliers.end(), large.outliers.begin(), large.outliers.end()));
    CHECK(std::find(small.outliers.begin(), small.outliers.end(), small.median_index) == small.outliers.end());
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      CHECK(small.central_lower(j) <= small.median_curve(j));
      CHECK(small.median_curve(j) <= small.central_upper(j));
      CHECK(small.fence_lower(j) <= small.central_lower(j));
      CHECK(small.central_upper(j) <= small.fence_upper(j));
    }
  }
}
