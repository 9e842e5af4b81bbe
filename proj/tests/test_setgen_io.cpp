#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>

#include "sobrem/io.hpp"
#include "sobrem/setgen.hpp"

using namespace sobrem;

namespace {

// Middle-thirds Cantor intervals at depth d in units of 3^-d.
std::vector<std::pair<long, long>> cantor_units(int d) {
  std::vector<std::pair<long, long>> iv{{0, 1}};
  for (int s = 0; s < d; ++s) {
    std::vector<std::pair<long, long>> next;
    for (auto [a, b] : iv) {
      next.push_back({3 * a, 3 * a + 1});
      next.push_back({3 * b - 1, 3 * b});
    }
    iv = next;
  }
  return iv;
}

long pow3(int d) {
  long r = 1;
  while (d-- > 0) r *= 3;
  return r;
}

SetSpec cantor(int depth) { return SetSpec{CantorFactor{Rational(1, 3), depth}}; }

}  // namespace

TEST(Setgen, CantorRasterMarksCellsOverlappedWithPositiveLength) {
  for (int d : {0, 1, 3, 5}) {
    const long n = pow3(d);
    const GridGeometry g({Rational(0)}, {Rational(1)}, Rational(1, n));
    const GridSet k = generate(cantor(d), g);
    const auto iv = cantor_units(d);
    for (long c = 0; c < n; ++c) {
      bool hit = false;
      for (auto [a, b] : iv) hit = hit || (a < c + 1 && b > c);
      EXPECT_EQ(k.marked(static_cast<std::size_t>(c)), hit) << "depth " << d << " cell " << c;
    }
    ASSERT_TRUE(k.exact());
  }
}

TEST(Setgen, CantorOnAFinerGridIsUnionOfCoveredIntervals) {
  const GridGeometry g({Rational(-1, 2)}, {Rational(3, 2)}, Rational(1, 81));
  const GridSet k = generate(cantor(2), g);
  // The pieces have length 1/9 but start half a cell off the grid, so each meets 10 cells.
  EXPECT_EQ(k.marked_count(), 4u * 10u);
}

TEST(Setgen, FatCantorLengthIsHalfPlusTail) {
  for (int d = 0; d < 10; ++d) {
    const Factor f = FatCantorFactor{Rational(1, 4), d};
    const Rational len = total_length(detail::factor_intervals(f));
    EXPECT_EQ(len, Rational(1, 2) + Rational(1, 2L << d)) << d;
  }
  EXPECT_THROW(detail::factor_intervals(Factor{FatCantorFactor{Rational(1, 2), 3}}), InvalidArgument);
}

TEST(Setgen, CarpetMatchesDigitOracle) {
  const int d = 3;
  const long n = pow3(d);
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, n));
  const GridSet k = generate(SetSpec{CarpetSpec{d}}, g);
  auto piece = [&](long i, long j) {
    if (i < 0 || j < 0 || i >= n || j >= n) return false;
    for (int s = 0; s < d; ++s, i /= 3, j /= 3)
      if (i % 3 == 1 && j % 3 == 1) return false;
    return true;
  };
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) {
      EXPECT_EQ(k.marked(Index{i, j, 0}), piece(i, j)) << i << "," << j;
    }
}

TEST(Setgen, DiagonalSegmentCoversDiagonalAndCornerNeighbours) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 8));
  const GridSet k = generate(SetSpec{SegmentSpec{{Rational(0), Rational(0)}, {Rational(1), Rational(1)}}}, g);
  EXPECT_EQ(k.marked_count(), 8u + 2u * 7u);
  for (std::int64_t i = 0; i < 8; ++i) EXPECT_TRUE(k.marked(Index{i, i, 0}));
  EXPECT_FALSE(k.marked(Index{0, 2, 0}));
}

TEST(Setgen, DiskContainsInteriorAndExcludesFarCells) {
  const GridGeometry g = GridGeometry::cube(2, Rational(-1), Rational(1), Rational(1, 64));
  const double r = 0.6;
  const GridSet k = generate(SetSpec{DiskSpec{{0.1, -0.05}, r}}, g);
  const double half_diag = g.hd() * std::numbers::sqrt2 / 2;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Index i = g.unravel(idx);
    const double dist = std::hypot(g.center(0, i[0]) - 0.1, g.center(1, i[1]) + 0.05);
    if (dist <= r) { EXPECT_TRUE(k.marked(idx)); }
    if (dist > r + half_diag) { EXPECT_FALSE(k.marked(idx)); }
  }
  EXPECT_NEAR(discrete_measure(k), std::numbers::pi * r * r, 8 * r * g.hd() * 1.5);
  EXPECT_GE(discrete_measure(k), std::numbers::pi * r * r);
}

TEST(Setgen, ArcIsInsideAnnulusAndCoversSampledPoints) {
  const GridGeometry g = GridGeometry::cube(2, Rational(-1), Rational(1), Rational(1, 64));
  const ArcSpec a{{0.0, 0.0}, 0.7, 0.3, 2.0};
  const GridSet k = generate(SetSpec{a}, g);
  for (int s = 0; s <= 1000; ++s) {
    const double t = a.theta0 + (a.theta1 - a.theta0) * s / 1000.0;
    const double x = 0.7 * std::cos(t), y = 0.7 * std::sin(t);
    const Index i{static_cast<std::int64_t>(std::floor((x + 1) * 64)),
                  static_cast<std::int64_t>(std::floor((y + 1) * 64)), 0};
    EXPECT_TRUE(k.marked(i)) << t;
  }
  // No marked cell lies on the far side of the circle.
  for (std::size_t idx = 0; idx < g.size(); ++idx)
    if (k.marked(idx)) { EXPECT_GT(g.center(1, g.unravel(idx)[1]), -0.05); }
}

TEST(Setgen, JuliaOfZeroIsTheUnitCircle) {
  const GridGeometry g = GridGeometry::cube(2, Rational(-2), Rational(2), Rational(1, 32));
  const GridSet k = generate(SetSpec{JuliaSpec{{0.0, 0.0}, 4.0, 64}}, g);
  ASSERT_FALSE(k.empty());
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (!k.marked(idx)) continue;
    const Index i = g.unravel(idx);
    const double r = std::hypot(g.center(0, i[0]), g.center(1, i[1]));
    EXPECT_NEAR(r, 1.0, g.hd());
  }
}

TEST(Setgen, UnionOfProductsKeepsExactBackend) {
  const SetSpec s{UnionSpec{{SetSpec{ProductSpec{{IntervalFactor{}, PointFactor{Rational(1, 2)}}}},
                             SetSpec{ProductSpec{{PointFactor{Rational(1, 2)}, IntervalFactor{}}}}}}};
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 16));
  const GridSet k = generate(s, g);
  ASSERT_TRUE(k.exact());
  // Two rows and two columns of width 2 (the lines sit on cell boundaries).
  EXPECT_EQ(k.marked_count(), 2u * 16u + 2u * 16u - 4u);
  const std::vector<Rational> at{Rational(0), Rational(1, 4)};
  const IntervalList hit = exact_line_intersection(k, 0, at);
  ASSERT_EQ(hit.size(), 1u);
  EXPECT_EQ(hit[0].lo, Rational(1, 2));
  EXPECT_EQ(hit[0].hi, Rational(1, 2));
}

TEST(Setgen, RejectsBadInput) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 8));
  EXPECT_THROW(generate(SetSpec{DiskSpec{{0.5, 0.5}, 0.6}}, g), InvalidArgument);
  EXPECT_THROW(generate(SetSpec{DiskSpec{{0.5}, 0.1}}, g), InvalidArgument);
  EXPECT_THROW(generate(SetSpec{CantorFactor{Rational(1, 3), -1}}, g), InvalidArgument);
  EXPECT_THROW(generate(SetSpec{CarpetSpec{8}}, g), InvalidArgument);
  EXPECT_THROW(generate(SetSpec{JuliaSpec{{0.0, 0.0}, 4.0, 64}}, g), InvalidArgument);
  EXPECT_THROW(exact_line_intersection(generate(SetSpec{DiskSpec{{0.5, 0.5}, 0.1}}, g), 0,
                                       std::vector<Rational>{Rational(0), Rational(0)}),
               NoExactBackend);
}

TEST(Setgen, RefineCouplesDepthAndCellSize) {
  const GridGeometry g({Rational(0)}, {Rational(1)}, Rational(1, 27));
  auto [s, g2] = refine(cantor(3), g);
  EXPECT_EQ(std::get<CantorFactor>(s.v).depth, 4);
  EXPECT_EQ(g2.h(), Rational(1, 81));
  auto [d, g3] = refine(SetSpec{DiskSpec{{0.5}, 0.25}}, g);
  EXPECT_EQ(g3.h(), Rational(1, 54));
}

TEST(Io, PgmAndRleRoundTripRandomMasks) {
  std::mt19937 rng(3);
  std::bernoulli_distribution coin(0.3);
  for (int dim = 1; dim <= 3; ++dim) {
    const GridGeometry g = GridGeometry::cube(dim, Rational(0), Rational(5), Rational(1));
    std::vector<std::uint8_t> m(g.size());
    for (auto& v : m) v = coin(rng);
    const GridSet k(g, m);
    const RasterFile pgm = parse_pgm(to_pgm(k)), rle = parse_rle(to_rle(k));
    EXPECT_EQ(pgm.mask, m);
    EXPECT_EQ(pgm.counts[0], 5);
    EXPECT_EQ(rle.mask, m);
    EXPECT_EQ(rle.dim, dim);
    EXPECT_EQ(rle.counts, g.counts());
    EXPECT_EQ(rle.h, 1.0);
  }
}

TEST(Io, CorruptFilesAreRejected) {
  const GridSet k(GridGeometry::cube(2, Rational(0), Rational(4), Rational(1)));
  std::string rle = to_rle(k);
  EXPECT_THROW(parse_rle(rle.substr(0, rle.size() - 1)), IoError);
  EXPECT_THROW(parse_pgm("P5\n4 4\n255\nabc"), IoError);
  EXPECT_THROW(parse_pgm("P2\n2 2\n255\n0 0 0"), IoError);
  EXPECT_THROW(read_raster("/nonexistent/x.pgm"), IoError);
}

TEST(Io, BitmapSpecLoadsRasterFile) {
  const GridGeometry g = GridGeometry::cube(2, Rational(0), Rational(1), Rational(1, 16));
  const GridSet disk = generate(SetSpec{DiskSpec{{0.5, 0.5}, 0.3}}, g);
  const auto dir = std::filesystem::temp_directory_path();
  for (const char* ext : {".pgm", ".rle"}) {
    const std::string path = (dir / (std::string("sobrem_io_test") + ext)).string();
    write_file(path, std::string(ext) == ".pgm" ? to_pgm(disk) : to_rle(disk));
    const GridSet back = generate(SetSpec{BitmapSpec{path}}, g);
    EXPECT_TRUE(std::equal(back.mask().begin(), back.mask().end(), disk.mask().begin()));
    EXPECT_THROW(generate(SetSpec{BitmapSpec{path}}, g.with_cell_size(Rational(1, 8))),
                 InvalidArgument);
    std::filesystem::remove(path);
  }
}
