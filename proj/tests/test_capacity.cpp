#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dense_oracle.hpp"
#include "sobrem/capacity.hpp"
#include "sobrem/setgen.hpp"

using namespace sobrem;

namespace {

GridSet random_set(const GridGeometry& g, unsigned seed, double density) {
  std::mt19937 rng(seed);
  std::bernoulli_distribution coin(density);
  GridSet k(g);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Index i = g.unravel(idx);
    bool inner = true;
    for (int a = 0; a < g.dim(); ++a) inner = inner && i[a] > 0 && i[a] < g.count(a) - 1;
    if (inner && coin(rng)) k.mark(idx);
  }
  return k;
}

}  // namespace

TEST(SobolevNorm, ConstantOnIntervalHasOnlyBoundaryJumps) {
  const GridGeometry g({Rational(0)}, {Rational(1)}, Rational(1, 10));
  const GridFunction u(g, 1.0);
  for (double p : {1.0, 2.0, 3.5}) {
    const double lp = 1.0;  // (n h)^{1/p}
    const double jumps = std::pow(2.0 * std::pow(10.0, p) / 10.0, 1.0 / p);
    EXPECT_NEAR(sobolev_norm(u, p), lp + jumps, 1e-12);
    EXPECT_NEAR(sobolev_norm(u, p, BoundaryMode::InteriorOnly), lp, 1e-12);
  }
  EXPECT_THROW(sobolev_norm(u, 0.5), InvalidArgument);
}

TEST(SobolevNorm, LinearRampInTwoDimensions) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 4));
  const GridFunction u = GridFunction::sample(g, [](std::span<const double> x) { return x[0]; });
  // Interior-only: the x-difference is 1 on 3 of 4 columns, y-differences vanish.
  double l2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) l2 += u[i] * u[i] / 16.0;
  const double dx = std::sqrt(12.0 / 16.0);
  EXPECT_NEAR(sobolev_norm(u, 2.0, BoundaryMode::InteriorOnly), std::sqrt(l2) + dx, 1e-12);
}

TEST(PEnergy, GradientMatchesFiniteDifferences) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 6));
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  for (double p : {1.5, 2.0, 3.0}) {
    detail::PEnergy en(g, p);
    std::vector<double> x(g.size()), grad(g.size());
    for (auto& v : x) v = u(rng);
    en.gradient(x, grad);
    for (std::size_t i = 0; i < g.size(); i += 5) {
      const double step = 1e-6;
      std::vector<double> a = x, b = x;
      a[i] += step;
      b[i] -= step;
      const double fd = (en.energy(a) - en.energy(b)) / (2 * step);
      EXPECT_NEAR(grad[i], fd, 1e-6 * std::max(1.0, std::abs(fd))) << "p=" << p << " i=" << i;
    }
  }
}

TEST(PEnergy, HessianVectorMatchesGradientDifferences) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 5));
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.2, 0.8), w(-1.0, 1.0);
  for (double p : {2.0, 3.0}) {
    detail::PEnergy en(g, p);
    std::vector<double> x(g.size()), v(g.size()), hv(g.size()), ga(g.size()), gb(g.size());
    for (auto& e : x) e = u(rng);
    for (auto& e : v) e = w(rng);
    en.set_hessian_point(x, 0.0);
    en.hess_vec(v, hv, std::vector<std::uint8_t>(g.size(), 0));
    const double t = 1e-6;
    std::vector<double> xa = x, xb = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xa[i] += t * v[i];
      xb[i] -= t * v[i];
    }
    en.gradient(xa, ga);
    en.gradient(xb, gb);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double fd = (ga[i] - gb[i]) / (2 * t);
      EXPECT_NEAR(hv[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "p=" << p;
    }
  }
}

TEST(Capacity, QuadraticCaseMatchesDenseSolve) {
  for (int dim = 1; dim <= 3; ++dim) {
    const Rational h = dim == 3 ? Rational(1, 6) : Rational(1, 12);
    const GridGeometry g = GridGeometry::cube(dim, Rational(0), Rational(1), h);
    for (unsigned seed = 1; seed <= 3; ++seed) {
      const GridSet k = random_set(g, seed * 17 + dim, 0.15);
      if (k.empty()) continue;
      const CapacityEstimate e = estimate_capacity(k, 2.0);
      ASSERT_TRUE(e.converged);
      const double ref = oracle::dense_capacity_p2(k);
      EXPECT_NEAR(e.value, ref, 1e-8 * ref) << "dim " << dim << " seed " << seed;
    }
  }
}

TEST(Capacity, PointInOneDimensionMatchesGeometricSeries) {
  // On the whole line the discrete minimizer is r^|j| with r + 1/r = 2 + h^2.
  const Rational h(1, 32);
  const double hd = h.to_double();
  const GridGeometry g({Rational(-12)}, {Rational(12)}, h);
  GridSet k(g);
  k.mark(static_cast<std::size_t>(g.count(0) / 2));
  const double b = 2.0 + hd * hd;
  const double r = (b - std::sqrt(b * b - 4.0)) / 2.0;
  // Energy = h * sum_j (x_{j+1} - x_j)^2 / h^2 + x_j^2, over both half-lines.
  const double tail = 1.0 / (1.0 - r * r);
  const double diffs = 2.0 * (1.0 - r) * (1.0 - r) * tail / (hd * hd);
  const double values = 2.0 * tail - 1.0;
  const double expected = hd * (diffs + values);
  const CapacityEstimate e = estimate_capacity(k, 2.0);
  EXPECT_NEAR(e.value, expected, 1e-9);
  EXPECT_NEAR(e.value, 2.0, 0.05);
}

TEST(Capacity, MinimizerIsBoundedAndEqualsOneOnK) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 20));
  const GridSet k = random_set(g, 42, 0.05);
  for (double p : {1.5, 3.0}) {
    const CapacitySolution s = solve_capacity(k, p);
    EXPECT_TRUE(s.estimate.converged) << p;
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_GE(s.potential[i], 0.0);
      EXPECT_LE(s.potential[i], 1.0);
      if (k.marked(i)) { EXPECT_EQ(s.potential[i], 1.0); }
    }
    detail::PEnergy en(g, p);
    EXPECT_NEAR(en.energy(s.potential.values()), s.estimate.value, 1e-12 * s.estimate.value);
  }
}

TEST(Capacity, MonotoneUnderInclusion) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 24));
  GridSet small = random_set(g, 9, 0.03);
  GridSet large = small;
  const GridSet extra = random_set(g, 10, 0.03);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (extra.marked(i)) large.mark(i);
  for (double p : {1.5, 2.0, 3.0}) {
    const double a = estimate_capacity(small, p).value;
    const double b = estimate_capacity(large, p).value;
    EXPECT_LE(a, b * (1 + 1e-9)) << p;
  }
}

TEST(Capacity, InitialGuessDoesNotChangeTheAnswer) {
  const GridGeometry g = GridGeometry::cube(2, Rational(-1, 2), Rational(3, 2), Rational(1, 16));
  const GridSet k = generate(SetSpec{DiskSpec{{0.5, 0.5}, 0.3}}, g);
  for (double p : {1.5, 3.0}) {
    std::vector<double> v;
    for (auto init : {CapacityInit::Smoothed, CapacityInit::Indicator, CapacityInit::Half}) {
      CapacityOptions o;
      o.init = init;
      v.push_back(estimate_capacity(k, p, o).value);
    }
    EXPECT_NEAR(v[0], v[1], 1e-6 * v[0]);
    EXPECT_NEAR(v[0], v[2], 1e-6 * v[0]);
  }
}

TEST(Capacity, BracketOrdersErosionCapacityDilation) {
  const GridGeometry g = GridGeometry::cube(2, Rational(-1, 2), Rational(3, 2), Rational(1, 32));
  const GridSet k = generate(SetSpec{DiskSpec{{0.5, 0.5}, 0.35}}, g);
  const auto [inner, outer] = capacity_bracket(k, 2.0);
  const double mid = estimate_capacity(k, 2.0).value;
  EXPECT_LE(inner.value, mid);
  EXPECT_LE(mid, outer.value);
  ASSERT_TRUE(inner.bracket);
  EXPECT_EQ(inner.bracket->outer, outer.value);
}

TEST(Capacity, ErodeAndDilateOfASingleCell) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 8));
  GridSet k(g);
  k.mark(Index{3, 3, 0});
  EXPECT_TRUE(erode(k).empty());
  EXPECT_EQ(dilate(k).marked_count(), 9u);
}

TEST(Capacity, EmptySetAndBadInput) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 8));
  const CapacityEstimate e = estimate_capacity(GridSet(g), 2.0);
  EXPECT_EQ(e.value, 0.0);
  EXPECT_TRUE(e.converged);
  GridSet edge(g);
  edge.mark(Index{0, 4, 0});
  EXPECT_THROW(estimate_capacity(edge, 2.0), InvalidArgument);
  GridSet mid(g);
  mid.mark(Index{4, 4, 0});
  EXPECT_THROW(estimate_capacity(mid, 1.0), InvalidArgument);
  EXPECT_THROW(estimate_capacity(mid, std::nan("")), InvalidArgument);
}

TEST(Capacity, IterationCapReportsNonConvergence) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 32));
  const GridSet k = random_set(g, 3, 0.02);
  CapacityOptions o;
  o.max_iterations = 1;
  o.kkt_tol = 1e-14;
  const CapacityEstimate e = estimate_capacity(k, 3.0, o);
  EXPECT_FALSE(e.converged);
  EXPECT_GT(e.kkt_residual, 1e-14);
}

TEST(Projection, FlatSetIsUnchangedAndSegmentShrinks) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 32));
  const GridSet flat = generate(
      SetSpec{SegmentSpec{{Rational(1, 4), Rational(33, 64)}, {Rational(3, 4), Rational(33, 64)}}}, g);
  EXPECT_EQ(project_flat(flat, 1), flat);
  const GridSet upright = generate(
      SetSpec{SegmentSpec{{Rational(33, 64), Rational(1, 4)}, {Rational(33, 64), Rational(3, 4)}}}, g);
  const ProjectionComparison c = project_and_compare(upright, 2.0, 1);
  ASSERT_TRUE(c.ratio);
  EXPECT_LT(*c.ratio, 1.0);
  EXPECT_EQ(project_flat(upright, 1).marked_count(), 1u);
}
