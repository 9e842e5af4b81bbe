#include <gtest/gtest.h>

#include <cmath>

#include "sobrem/linescan.hpp"
#include "sobrem/setgen.hpp"

using namespace sobrem;

namespace {

const std::vector<double> kX{1.0, 0.0};
const std::vector<double> kY{0.0, 1.0};

// Fraction of the stratified offsets (2i+1)/(2m) of [lo, hi] that satisfy pred.
template <class P>
double offset_fraction(std::int64_t m, double lo, double hi, P pred) {
  std::int64_t hit = 0;
  for (std::int64_t i = 0; i < m; ++i)
    if (pred(lo + (hi - lo) * (2.0 * i + 1) / (2.0 * m))) ++hit;
  return static_cast<double>(hit) / static_cast<double>(m);
}

bool in_middle_thirds_cantor(double x, int depth) {
  for (int s = 0; s < depth; ++s) {
    if (x < 0 || x > 1) return false;
    x *= 3;
    if (x > 1 && x < 2) return false;
    if (x >= 2) x -= 2;
  }
  return x >= 0 && x <= 1;
}

}  // namespace

TEST(LineScan, SquareExactAndRasterAgree) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 64));
  const GridSet k = generate(
      SetSpec{ProductSpec{{IntervalFactor{Rational(1, 4), Rational(3, 4)}, IntervalFactor{Rational(1, 4), Rational(3, 4)}}}}, g);
  const double expected = offset_fraction(256, 0, 1, [](double y) { return y >= 0.25 && y <= 0.75; });
  for (bool exact : {true, false}) {
    ScanOptions o;
    o.prefer_exact = exact;
    const DirectionReport r = scan_direction(k, kX, o);
    EXPECT_EQ(r.backend, exact ? Backend::Exact : Backend::Raster);
    EXPECT_EQ(r.lines_sampled, 256);
    EXPECT_DOUBLE_EQ(r.frac_meeting, expected);
    EXPECT_DOUBLE_EQ(r.frac_positive_length, expected);
    for (const auto& l : r.per_line)
      if (l.components > 0) {
        EXPECT_EQ(l.components, 1);
        EXPECT_NEAR(l.length, 0.5, 1e-12);
      }
  }
}

TEST(LineScan, CantorTimesPointMeetsVerticalLinesInSinglePoints) {
  const GridGeometry g({Rational(0), Rational(-1, 2)}, {Rational(1), Rational(1, 2)}, Rational(1, 243));
  const int depth = 5;
  const GridSet k = generate(
      SetSpec{ProductSpec{{CantorFactor{Rational(1, 3), depth}, PointFactor{Rational(0)}}}}, g);
  ScanOptions o;
  o.n_lines = 729;
  const DirectionReport v = scan_direction(k, kY, o);
  EXPECT_EQ(v.backend, Backend::Exact);
  EXPECT_DOUBLE_EQ(v.frac_meeting, offset_fraction(729, 0, 1, [&](double x) { return in_middle_thirds_cantor(x, depth); }));
  EXPECT_EQ(v.frac_positive_length, 0.0);
  EXPECT_EQ(v.frac_uncountable_proxy, 0.0);
  for (const auto& l : v.per_line) EXPECT_EQ(l.zero_length_components, l.components);
  // With an odd line count the middle horizontal line is y = 0 and carries the whole set.
  const DirectionReport hline = scan_direction(k, kX, o);
  EXPECT_DOUBLE_EQ(hline.frac_meeting, 1.0 / 729);
  EXPECT_EQ(hline.per_line[364].components, 32);
}

TEST(LineScan, FatCantorProductHasPositiveLengthOnItsMeasure) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 256));
  const SetSpec s{ProductSpec{{FatCantorFactor{Rational(1, 4), 6}, IntervalFactor{}}}};
  const GridSet k = generate(s, g);
  const IntervalList base = detail::factor_intervals(Factor{FatCantorFactor{Rational(1, 4), 6}});
  ScanOptions o;
  o.n_lines = 1024;
  std::int64_t inside = 0;
  for (std::int64_t i = 0; i < 1024; ++i) inside += contains(base, Rational(2 * i + 1, 2048)) ? 1 : 0;
  const double expected = static_cast<double>(inside) / 1024.0;
  const DirectionReport v = scan_direction(k, kY, o);
  EXPECT_DOUBLE_EQ(v.frac_positive_length, expected);
  // 64 pieces, each resolved to within one line spacing on either side.
  EXPECT_NEAR(v.frac_positive_length, 0.5 + 1.0 / 128, 64.0 / 1024);
  // Horizontal lines cross 64 intervals: every line is uncountable-like.
  const DirectionReport hline = scan_direction(k, kX, o);
  EXPECT_EQ(hline.frac_uncountable_proxy, 1.0);
  EXPECT_EQ(hline.per_line.front().components, 64);
}

TEST(LineScan, DiagonalScanOfThinDiagonalCrossIsZeroLength) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 128));
  const SetSpec cross{UnionSpec{{SetSpec{SegmentSpec{{Rational(1, 2), Rational(0)}, {Rational(1, 2), Rational(1)}}},
                                 SetSpec{SegmentSpec{{Rational(0), Rational(1, 2)}, {Rational(1), Rational(1, 2)}}}}}};
  const GridSet k = generate(cross, g);
  const std::vector<double> diag{1.0, 1.0};
  const DirectionReport r = scan_direction(k, diag);
  EXPECT_EQ(r.backend, Backend::Raster);
  EXPECT_LT(r.frac_positive_length, 0.02);
  EXPECT_GT(r.frac_meeting, 0.5);
  EXPECT_LE(r.aliasing_cells, 1.0);
  EXPECT_FALSE(r.aliasing_flag);
}

TEST(LineScan, DiskRotatedScanMeetsChordFraction) {
  const GridGeometry g = GridGeometry::cube(2, Rational(-1), Rational(1), Rational(1, 128));
  const GridSet k = generate(SetSpec{DiskSpec{{0.0, 0.0}, 0.5}}, g);
  const std::vector<double> diag{1.0, -1.0};
  const DirectionReport r = scan_direction(k, diag);
  double total = 0.0, meet = 0.0;
  for (const auto& l : r.per_line) {
    if (l.components == 0) continue;
    meet += 1;
    double d2 = 0.0;
    for (double c : l.offset) d2 += c * c;
    total += std::abs(l.length - 2.0 * std::sqrt(std::max(0.0, 0.25 - d2)));
  }
  EXPECT_GT(meet, 0);
  EXPECT_LT(total / meet, 4 * g.hd());
  EXPECT_EQ(r.frac_uncountable_proxy, r.frac_positive_length);
}

TEST(LineScan, ThreeDimensionalLattice) {
  const GridGeometry g = GridGeometry::cube(3, Rational(0), Rational(1), Rational(1, 16));
  const GridSet k = generate(SetSpec{ProductSpec{{IntervalFactor{}, IntervalFactor{}, PointFactor{Rational(1, 2)}}}}, g);
  ScanOptions o;
  o.n_lines = 100;
  const std::vector<double> z{0.0, 0.0, 1.0}, x{1.0, 0.0, 0.0};
  const DirectionReport rz = scan_direction(k, z, o);
  EXPECT_EQ(rz.lines_sampled, 100);
  EXPECT_EQ(rz.frac_meeting, 1.0);
  EXPECT_EQ(rz.frac_positive_length, 0.0);
  EXPECT_EQ(scan_direction(k, x, o).frac_meeting, 0.0);
}

TEST(LineScan, RecordRunTreatsShortRunsAsPoints) {
  LineRecord rec;
  detail::record_run(rec, 0.01, 0.02);
  detail::record_run(rec, 0.5, 0.02);
  EXPECT_EQ(rec.components, 2);
  EXPECT_EQ(rec.zero_length_components, 1);
  EXPECT_DOUBLE_EQ(rec.length, 0.5);
}

TEST(Directions, DefaultsAndDeterminant) {
  EXPECT_EQ(default_directions(2, true).size(), 4u);
  EXPECT_EQ(default_directions(3, false).size(), 3u);
  EXPECT_NEAR(direction_determinant(default_directions(3, false)), 1.0, 1e-12);
  EXPECT_NEAR(direction_determinant({{1.0, 1.0}, {1.0, -1.0}}), 1.0, 1e-12);
  EXPECT_NEAR(direction_determinant({{1.0, 0.0}, {2.0, 0.0}}), 0.0, 1e-12);
}

TEST(Checks, SufficientAndWitnessOnSquareAndCantorDust) {
  const GridGeometry gc = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 81));
  const GridGeometry gf = gc.with_cell_size(Rational(1, 243));
  const SetSpec dust{ProductSpec{{CantorFactor{Rational(1, 3), 4}, CantorFactor{Rational(1, 3), 4}}}};
  const SetSpec dust_f{ProductSpec{{CantorFactor{Rational(1, 3), 5}, CantorFactor{Rational(1, 3), 5}}}};
  const SufficientReport s = sufficient_check(generate(dust, gc), generate(dust_f, gf), default_directions(2, false));
  EXPECT_EQ(s.directions.size(), 2u);
  EXPECT_FALSE(s.mixed_backends);

  const SetSpec square{ProductSpec{{IntervalFactor{Rational(1, 4), Rational(3, 4)}, IntervalFactor{Rational(1, 4), Rational(3, 4)}}}};
  const GridSet a = generate(square, gc), b = generate(square, gf);
  EXPECT_FALSE(sufficient_check(a, b, default_directions(2, false)).pass);
  const WitnessReport w = necessary_witness_check(a, b, default_directions(2, true));
  EXPECT_TRUE(w.found);
  EXPECT_EQ(w.witnesses.size(), 4u);

  EXPECT_THROW(sufficient_check(a, b, {{1.0, 0.0}}), InvalidArgument);
  EXPECT_THROW(sufficient_check(a, b, {{1.0, 0.0}, {1.0, 0.0}}), InvalidArgument);
  EXPECT_THROW(necessary_witness_check(a, b, default_directions(2, false)), InvalidArgument);
  ScanOptions few;
  few.n_lines = 10;
  EXPECT_THROW(scan_direction(a, kX, few), InvalidArgument);
  EXPECT_THROW(scan_direction(a, std::vector<double>{1.0, 0.0, 0.0}), InvalidArgument);
}
