#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sobrem/exact.hpp"
#include "sobrem/grid.hpp"
#include "sobrem/io.hpp"
#include "sobrem/rational.hpp"

namespace sobrem {

// ---------------------------------------------------------------------------
// Set specifications

/// Closed interval [a, b] as a product factor.
struct IntervalFactor {
  Rational a{0};
  Rational b{1};
};

/// Single point as a product factor.
struct PointFactor {
  Rational x{0};
};

/// Symmetric Cantor set on [a, b]: every stage removes the open middle
/// fraction `ratio` of each remaining interval.
struct CantorFactor {
  Rational ratio{1, 3};
  int depth = 0;
  Rational a{0};
  Rational b{1};
};

/// Positive-measure Cantor set on [a, b]: stage k removes an open middle
/// piece of length ratio^k * (b - a) from every remaining interval.
struct FatCantorFactor {
  Rational ratio{1, 4};
  int depth = 0;
  Rational a{0};
  Rational b{1};
};

using Factor = std::variant<IntervalFactor, PointFactor, CantorFactor, FatCantorFactor>;

struct ProductSpec {
  std::vector<Factor> factors;
};
/// Straight segment between two points.
struct SegmentSpec {
  std::vector<Rational> from;
  std::vector<Rational> to;
};
/// Closed ball.
struct DiskSpec {
  std::vector<double> center;
  double radius = 0.0;
};
/// Planar circular arc, angles in radians with theta0 <= theta1.
struct ArcSpec {
  std::vector<double> center{0.0, 0.0};
  double radius = 1.0;
  double theta0 = 0.0;
  double theta1 = std::numbers::pi / 2;
};
/// Julia set of z -> z^2 + c.
struct JuliaSpec {
  std::complex<double> c{0.0, 0.0};
  double escape_radius = 4.0;
  int max_iterations = 512;
};
/// Sierpinski carpet on the square [a, b]^2.
struct CarpetSpec {
  int depth = 0;
  Rational a{0};
  Rational b{1};
};
/// Raster loaded from a PGM or run-length file.
struct BitmapSpec {
  std::string path;
};
struct SetSpec;
struct UnionSpec {
  std::vector<SetSpec> parts;
};

/// Tagged description of a compact test set.
struct SetSpec {
  std::variant<CantorFactor, FatCantorFactor, ProductSpec, SegmentSpec, DiskSpec, JuliaSpec,
               BitmapSpec, CarpetSpec, ArcSpec, UnionSpec>
      v;

  [[nodiscard]] std::string kind() const;
};

inline std::string SetSpec::kind() const {
  static constexpr const char* names[] = {"cantor", "fat_cantor", "product", "segment", "disk",
                                          "julia",  "bitmap",     "carpet",  "arc",     "union"};
  return names[v.index()];
}

// ---------------------------------------------------------------------------
// Exact construction

namespace detail {

inline void check_factor_depth(int depth) {
  if (depth < 0) throw InvalidArgument("construction depth must be >= 0");
  if (depth > 24) throw InvalidArgument("construction depth exceeds 24");
}

inline IntervalList factor_intervals(const Factor& f) {
  return std::visit(
      [](const auto& x) -> IntervalList {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, IntervalFactor>) {
          if (x.b < x.a) throw InvalidArgument("interval factor has b < a");
          return {{x.a, x.b}};
        } else if constexpr (std::is_same_v<T, PointFactor>) {
          return {{x.x, x.x}};
        } else if constexpr (std::is_same_v<T, CantorFactor>) {
          check_factor_depth(x.depth);
          if (x.ratio <= Rational(0) || x.ratio >= Rational(1))
            throw InvalidArgument("Cantor removal ratio must lie in (0,1)");
          if (x.b <= x.a) throw InvalidArgument("Cantor support needs a < b");
          IntervalList cur{{x.a, x.b}};
          const Rational keep = (Rational(1) - x.ratio) / Rational(2);
          for (int s = 0; s < x.depth; ++s) {
            IntervalList next;
            next.reserve(cur.size() * 2);
            for (const auto& iv : cur) {
              const Rational piece = iv.length() * keep;
              next.push_back({iv.lo, iv.lo + piece});
              next.push_back({iv.hi - piece, iv.hi});
            }
            cur = std::move(next);
          }
          return cur;
        } else {
          check_factor_depth(x.depth);
          if (x.ratio <= Rational(0) || x.ratio >= Rational(1))
            throw InvalidArgument("fat Cantor removal ratio must lie in (0,1)");
          if (x.b <= x.a) throw InvalidArgument("fat Cantor support needs a < b");
          IntervalList cur{{x.a, x.b}};
          Rational removed = x.b - x.a;
          for (int s = 1; s <= x.depth; ++s) {
            removed *= x.ratio;
            IntervalList next;
            next.reserve(cur.size() * 2);
            for (const auto& iv : cur) {
              if (removed >= iv.length())
                throw InvalidArgument("fat Cantor removal schedule exhausts an interval at stage " +
                                      std::to_string(s));
              const Rational piece = (iv.length() - removed) / Rational(2);
              next.push_back({iv.lo, iv.lo + piece});
              next.push_back({iv.hi - piece, iv.hi});
            }
            cur = std::move(next);
          }
          return cur;
        }
      },
      f);
}

inline int factor_depth(const Factor& f) {
  if (const auto* c = std::get_if<CantorFactor>(&f)) return c->depth;
  if (const auto* c = std::get_if<FatCantorFactor>(&f)) return c->depth;
  return 0;
}

inline std::shared_ptr<ExactSet> exact_product(std::span<const Factor> factors) {
  auto e = std::make_shared<ExactSet>();
  e->dim = static_cast<int>(factors.size());
  ProductCell cell;
  for (const auto& f : factors) {
    cell.axes.push_back(factor_intervals(f));
    e->depth = std::max(e->depth, factor_depth(f));
  }
  e->cells.push_back(std::move(cell));
  return e;
}

inline std::shared_ptr<ExactSet> exact_carpet(const CarpetSpec& s) {
  check_factor_depth(s.depth);
  if (s.depth > 7) throw InvalidArgument("carpet depth exceeds 7");
  if (s.b <= s.a) throw InvalidArgument("carpet support needs a < b");
  struct Sq {
    Rational x, y, side;
  };
  std::vector<Sq> cur{{s.a, s.a, s.b - s.a}};
  for (int d = 0; d < s.depth; ++d) {
    std::vector<Sq> next;
    next.reserve(cur.size() * 8);
    for (const auto& q : cur) {
      const Rational t = q.side / Rational(3);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          if (i != 1 || j != 1) next.push_back({q.x + t * Rational(i), q.y + t * Rational(j), t});
    }
    cur = std::move(next);
  }
  auto e = std::make_shared<ExactSet>();
  e->dim = 2;
  e->depth = s.depth;
  e->cells.reserve(cur.size());
  for (const auto& q : cur)
    e->cells.push_back(ProductCell{{{{q.x, q.x + q.side}}, {{q.y, q.y + q.side}}}});
  return e;
}

}  // namespace detail

int spec_dimension(const SetSpec& spec);

/// Exact description when the construction admits one: Cantor-type
/// products, axis-aligned segments, carpets and unions of those.
inline std::shared_ptr<const ExactSet> exact_description(const SetSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::shared_ptr<const ExactSet> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CantorFactor> || std::is_same_v<T, FatCantorFactor>) {
          const Factor f = s;
          return detail::exact_product(std::span<const Factor>(&f, 1));
        } else if constexpr (std::is_same_v<T, ProductSpec>) {
          if (s.factors.empty() || s.factors.size() > kMaxDim)
            throw InvalidArgument("product needs 1 to 3 factors");
          return detail::exact_product(s.factors);
        } else if constexpr (std::is_same_v<T, SegmentSpec>) {
          if (s.from.size() != s.to.size() || s.from.empty() || s.from.size() > kMaxDim)
            throw InvalidArgument("segment endpoints must share a dimension in 1..3");
          int moving = 0;
          for (std::size_t k = 0; k < s.from.size(); ++k) moving += s.from[k] != s.to[k];
          if (moving > 1) return nullptr;
          std::vector<Factor> f;
          for (std::size_t k = 0; k < s.from.size(); ++k) {
            if (s.from[k] == s.to[k])
              f.emplace_back(PointFactor{s.from[k]});
            else
              f.emplace_back(IntervalFactor{min(s.from[k], s.to[k]), max(s.from[k], s.to[k])});
          }
          return detail::exact_product(f);
        } else if constexpr (std::is_same_v<T, CarpetSpec>) {
          return detail::exact_carpet(s);
        } else if constexpr (std::is_same_v<T, UnionSpec>) {
          if (s.parts.empty()) throw InvalidArgument("union needs at least one part");
          auto e = std::make_shared<ExactSet>();
          e->dim = spec_dimension(s.parts.front());
          for (const auto& p : s.parts) {
            auto pe = exact_description(p);
            if (!pe) return nullptr;
            if (pe->dim != e->dim) throw InvalidArgument("union parts differ in dimension");
            e->depth = std::max(e->depth, pe->depth);
            e->cells.insert(e->cells.end(), pe->cells.begin(), pe->cells.end());
          }
          return e;
        } else {
          return nullptr;
        }
      },
      spec.v);
}

/// Ambient dimension of the set described by `spec`; bitmaps report 0
/// (dimension comes from the file).
inline int spec_dimension(const SetSpec& spec) {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CantorFactor> || std::is_same_v<T, FatCantorFactor>) {
          return 1;
        } else if constexpr (std::is_same_v<T, ProductSpec>) {
          return static_cast<int>(s.factors.size());
        } else if constexpr (std::is_same_v<T, SegmentSpec>) {
          return static_cast<int>(s.from.size());
        } else if constexpr (std::is_same_v<T, DiskSpec>) {
          return static_cast<int>(s.center.size());
        } else if constexpr (std::is_same_v<T, UnionSpec>) {
          return s.parts.empty() ? 0 : spec_dimension(s.parts.front());
        } else if constexpr (std::is_same_v<T, BitmapSpec>) {
          return 0;
        } else {
          return 2;
        }
      },
      spec.v);
}

// ---------------------------------------------------------------------------
// Rasterization

namespace detail {

inline void check_inside(const GridGeometry& g, std::span<const double> lo,
                         std::span<const double> hi) {
  for (int k = 0; k < g.dim(); ++k) {
    if (lo[k] < g.lo(k).to_double() || hi[k] > g.hi(k).to_double())
      throw InvalidArgument("set extent exceeds the grid box along axis " + std::to_string(k));
  }
}

inline std::int64_t clamp_index(const GridGeometry& g, int k, double x) {
  const auto i = static_cast<std::int64_t>(std::floor((x - g.lo(k).to_double()) / g.hd()));
  return std::clamp<std::int64_t>(i, 0, g.count(k) - 1);
}

/// Calls f(index) for each cell in the inclusive index box [a, b].
template <class F>
void for_box(const Index& a, const Index& b, F&& f) {
  Index i{};
  for (i[2] = a[2]; i[2] <= b[2]; ++i[2])
    for (i[1] = a[1]; i[1] <= b[1]; ++i[1])
      for (i[0] = a[0]; i[0] <= b[0]; ++i[0]) f(i);
}

inline void rasterize_exact(const ExactSet& e, GridSet& out) {
  const auto& g = out.geometry();
  if (e.dim != g.dim()) throw InvalidArgument("set dimension does not match grid dimension");
  if (e.empty()) return;
  const auto [blo, bhi] = e.bounds();
  for (int k = 0; k < g.dim(); ++k)
    if (blo[k] < g.lo(k) || bhi[k] > g.hi(k))
      throw InvalidArgument("set extent exceeds the grid box along axis " + std::to_string(k));

  for (const auto& cell : e.cells) {
    // Per-axis merged index ranges.
    std::array<std::vector<std::pair<std::int64_t, std::int64_t>>, kMaxDim> ranges;
    bool nonempty = true;
    for (int k = 0; k < kMaxDim; ++k) {
      if (k >= g.dim()) {
        ranges[k].push_back({0, 0});
        continue;
      }
      for (const auto& iv : cell.axes[k]) {
        auto [a, b] = cover_cells(iv, g.lo(k), g.h());
        a = std::max<std::int64_t>(a, 0);
        b = std::min<std::int64_t>(b, g.count(k) - 1);
        if (a > b) continue;
        if (!ranges[k].empty() && a <= ranges[k].back().second + 1)
          ranges[k].back().second = std::max(ranges[k].back().second, b);
        else
          ranges[k].push_back({a, b});
      }
      nonempty = nonempty && !ranges[k].empty();
    }
    if (!nonempty) continue;
    for (const auto& r2 : ranges[2])
      for (const auto& r1 : ranges[1])
        for (const auto& r0 : ranges[0])
          for_box({r0.first, r1.first, r2.first}, {r0.second, r1.second, r2.second},
                  [&](const Index& i) { out.mark(i); });
  }
}

inline void rasterize_disk(const DiskSpec& s, GridSet& out) {
  const auto& g = out.geometry();
  if (static_cast<int>(s.center.size()) != g.dim())
    throw InvalidArgument("disk centre dimension does not match grid");
  if (!(s.radius >= 0.0)) throw InvalidArgument("disk radius must be >= 0");
  std::vector<double> lo(s.center), hi(s.center);
  for (auto& v : lo) v -= s.radius;
  for (auto& v : hi) v += s.radius;
  check_inside(g, lo, hi);
  Index a{0, 0, 0}, b{0, 0, 0};
  for (int k = 0; k < g.dim(); ++k) {
    a[k] = clamp_index(g, k, lo[k]);
    b[k] = clamp_index(g, k, hi[k]);
  }
  const double r2 = s.radius * s.radius;
  for_box(a, b, [&](const Index& i) {
    double d2 = 0.0;
    for (int k = 0; k < g.dim(); ++k) {
      const double c0 = g.corner(k, i[k]);
      const double c1 = g.corner(k, i[k] + 1);
      const double q = std::clamp(s.center[k], c0, c1) - s.center[k];
      d2 += q * q;
    }
    if (d2 <= r2) out.mark(i);
  });
}

/// Closed cube [c0, c1] meets segment p + t(q - p), t in [0,1] (slab test).
inline bool segment_meets_box(std::span<const double> p, std::span<const double> q,
                              std::span<const double> c0, std::span<const double> c1) {
  double t0 = 0.0, t1 = 1.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = q[k] - p[k];
    if (d == 0.0) {
      if (p[k] < c0[k] || p[k] > c1[k]) return false;
      continue;
    }
    double ta = (c0[k] - p[k]) / d;
    double tb = (c1[k] - p[k]) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

inline void rasterize_segment(const SegmentSpec& s, GridSet& out) {
  const auto& g = out.geometry();
  const int n = g.dim();
  if (static_cast<int>(s.from.size()) != n || static_cast<int>(s.to.size()) != n)
    throw InvalidArgument("segment dimension does not match grid");
  std::vector<double> p(n), q(n), lo(n), hi(n);
  for (int k = 0; k < n; ++k) {
    p[k] = s.from[k].to_double();
    q[k] = s.to[k].to_double();
    lo[k] = std::min(p[k], q[k]);
    hi[k] = std::max(p[k], q[k]);
  }
  check_inside(g, lo, hi);
  Index a{0, 0, 0}, b{0, 0, 0};
  for (int k = 0; k < n; ++k) {
    a[k] = std::max<std::int64_t>(clamp_index(g, k, lo[k]) - 1, 0);
    b[k] = std::min<std::int64_t>(clamp_index(g, k, hi[k]) + 1, g.count(k) - 1);
  }
  std::vector<double> c0(n), c1(n);
  for_box(a, b, [&](const Index& i) {
    for (int k = 0; k < n; ++k) {
      c0[k] = g.corner(k, i[k]);
      c1[k] = g.corner(k, i[k] + 1);
    }
    if (segment_meets_box(p, q, c0, c1)) out.mark(i);
  });
}

inline double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  return a < 0 ? a + two_pi : a;
}

inline void rasterize_arc(const ArcSpec& s, GridSet& out) {
  const auto& g = out.geometry();
  if (g.dim() != 2 || s.center.size() != 2) throw InvalidArgument("arc requires a planar grid");
  if (!(s.radius > 0.0) || !(s.theta1 >= s.theta0))
    throw InvalidArgument("arc needs radius > 0 and theta1 >= theta0");
  const double span = s.theta1 - s.theta0;
  // Bounding box of the arc: endpoints plus any axis extremes it passes.
  std::vector<double> lo{s.center[0] + s.radius * std::cos(s.theta0),
                         s.center[1] + s.radius * std::sin(s.theta0)};
  std::vector<double> hi(lo);
  auto include = [&](double t) {
    const double x = s.center[0] + s.radius * std::cos(t);
    const double y = s.center[1] + s.radius * std::sin(t);
    lo[0] = std::min(lo[0], x);
    lo[1] = std::min(lo[1], y);
    hi[0] = std::max(hi[0], x);
    hi[1] = std::max(hi[1], y);
  };
  include(s.theta1);
  for (int q = 0; q < 8; ++q) {
    const double t = q * std::numbers::pi / 2;
    if (span >= 2 * std::numbers::pi || wrap_angle(t - s.theta0) <= span) include(t);
  }
  check_inside(g, lo, hi);
  auto in_arc = [&](double t) {
    return span >= 2 * std::numbers::pi || wrap_angle(t - s.theta0) <= span;
  };
  Index a{clamp_index(g, 0, lo[0]), clamp_index(g, 1, lo[1]), 0};
  Index b{clamp_index(g, 0, hi[0]), clamp_index(g, 1, hi[1]), 0};
  for_box(a, b, [&](const Index& i) {
    const double x0 = g.corner(0, i[0]) - s.center[0], x1 = g.corner(0, i[0] + 1) - s.center[0];
    const double y0 = g.corner(1, i[1]) - s.center[1], y1 = g.corner(1, i[1] + 1) - s.center[1];
    const double nx = std::clamp(0.0, x0, x1), ny = std::clamp(0.0, y0, y1);
    const double dmin = std::hypot(nx, ny);
    const double dmax = std::max(std::hypot(x0, y0),
                                 std::max(std::hypot(x1, y0), std::max(std::hypot(x0, y1),
                                                                       std::hypot(x1, y1))));
    if (dmin > s.radius || dmax < s.radius) return;
    if (x0 <= 0 && 0 <= x1 && y0 <= 0 && 0 <= y1) {  // cell holds the centre
      out.mark(i);
      return;
    }
    // Angular span of the cell seen from the centre (< pi since the centre
    // is outside the cell); mark when it overlaps the arc.
    const double ang[4] = {std::atan2(y0, x0), std::atan2(y0, x1), std::atan2(y1, x0),
                           std::atan2(y1, x1)};
    const double ref = ang[0];
    double amin = 0.0, amax = 0.0;
    for (double v : ang) {
      double d = v - ref;
      if (d > std::numbers::pi) d -= 2 * std::numbers::pi;
      if (d < -std::numbers::pi) d += 2 * std::numbers::pi;
      amin = std::min(amin, d);
      amax = std::max(amax, d);
    }
    const double c0 = ref + amin;
    const double width = amax - amin;
    if (in_arc(c0) || in_arc(c0 + width) || wrap_angle(s.theta0 - c0) <= width) out.mark(i);
  });
}

inline bool julia_escapes(std::complex<double> z, const JuliaSpec& s) {
  const double r2 = s.escape_radius * s.escape_radius;
  for (int it = 0; it < s.max_iterations; ++it) {
    if (std::norm(z) > r2) return true;
    z = z * z + s.c;
  }
  return std::norm(z) > r2;
}

inline void rasterize_julia(const JuliaSpec& s, GridSet& out) {
  const auto& g = out.geometry();
  if (g.dim() != 2) throw InvalidArgument("Julia sets require a planar grid");
  if (!(s.escape_radius >= 2.0)) throw InvalidArgument("escape radius must be >= 2");
  if (s.max_iterations < 1) throw InvalidArgument("iteration cap must be >= 1");
  const auto nx = g.count(0), ny = g.count(1);
  const auto stride = static_cast<std::size_t>(nx + 1);
  std::vector<std::uint8_t> corner(stride * static_cast<std::size_t>(ny + 1));
  for (std::int64_t j = 0; j <= ny; ++j)
    for (std::int64_t i = 0; i <= nx; ++i)
      corner[static_cast<std::size_t>(j) * stride + static_cast<std::size_t>(i)] =
          julia_escapes({g.corner(0, i), g.corner(1, j)}, s);
  for (std::int64_t j = 0; j < ny; ++j)
    for (std::int64_t i = 0; i < nx; ++i) {
      const auto at = [&](std::int64_t a, std::int64_t b) {
        return corner[static_cast<std::size_t>(b) * stride + static_cast<std::size_t>(a)];
      };
      const std::uint8_t c = julia_escapes({g.center(0, i), g.center(1, j)}, s);
      const bool agree = at(i, j) == c && at(i + 1, j) == c && at(i, j + 1) == c &&
                         at(i + 1, j + 1) == c;
      if (!agree) out.mark(Index{i, j, 0});
    }
  for (std::int64_t j = 0; j < ny; ++j)
    for (std::int64_t i = 0; i < nx; ++i)
      if ((i == 0 || j == 0 || i == nx - 1 || j == ny - 1) && out.marked(Index{i, j, 0}))
        throw InvalidArgument("Julia set reaches the grid box boundary; enlarge the box");
}

}  // namespace detail

/// Outer rasterization of `spec` on `geometry`.
///
/// Sets with an exact description keep it attached to the result. Throws
/// InvalidArgument for invalid parameters or when the set leaves the box.
inline GridSet generate(const SetSpec& spec, const GridGeometry& geometry) {
  GridSet out(geometry);
  if (auto exact = exact_description(spec)) {
    detail::rasterize_exact(*exact, out);
    out.set_exact(std::move(exact));
    return out;
  }
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DiskSpec>) {
          detail::rasterize_disk(s, out);
        } else if constexpr (std::is_same_v<T, SegmentSpec>) {
          detail::rasterize_segment(s, out);
        } else if constexpr (std::is_same_v<T, ArcSpec>) {
          detail::rasterize_arc(s, out);
        } else if constexpr (std::is_same_v<T, JuliaSpec>) {
          detail::rasterize_julia(s, out);
        } else if constexpr (std::is_same_v<T, BitmapSpec>) {
          GridSet loaded = read_raster(s.path);
          // PGM stacks 3-D slices into one image, so compare the flat shape.
          if (loaded.geometry().size() != geometry.size() ||
              loaded.geometry().count(0) != geometry.count(0))
            throw InvalidArgument("bitmap '" + s.path + "' does not match the grid cell counts");
          out = GridSet(geometry, std::vector<std::uint8_t>(loaded.mask().begin(),
                                                            loaded.mask().end()));
        } else if constexpr (std::is_same_v<T, UnionSpec>) {
          for (const auto& p : s.parts) {
            const GridSet part = generate(p, geometry);
            for (std::size_t i = 0; i < part.mask().size(); ++i)
              if (part.marked(i)) out.mark(i);
          }
        } else {
          throw InvalidArgument("unsupported set kind");
        }
      },
      spec.v);
  return out;
}

/// Marked cell count times h^N.
inline double discrete_measure(const GridSet& k) {
  return static_cast<double>(k.marked_count()) * k.geometry().cell_volume();
}

/// Raised when an exact query is made on a set without an exact backend.
class NoExactBackend : public std::runtime_error {
 public:
  NoExactBackend() : std::runtime_error("set has no exact backend; use a raster scan") {}
};

/// Exact intersection of K with the line parallel to `axis` through the
/// transverse coordinates (entry `axis` ignored). Points come back as
/// zero-length intervals.
inline IntervalList exact_line_intersection(const GridSet& k, int axis,
                                            std::span<const Rational> transverse) {
  if (!k.exact()) throw NoExactBackend();
  if (axis < 0 || axis >= k.exact()->dim) throw InvalidArgument("line axis out of range");
  if (static_cast<int>(transverse.size()) < k.exact()->dim)
    throw InvalidArgument("transverse coordinate count must equal the dimension");
  return k.exact()->line(axis, transverse);
}

// ---------------------------------------------------------------------------
// Refinement

/// Next level of a refinement study: cell size shrinks and construction
/// depths grow together so that the smallest construction interval keeps
/// tracking the cell size. Specs without a depth get h / 2.
inline std::pair<SetSpec, GridGeometry> refine(const SetSpec& spec, const GridGeometry& g) {
  SetSpec next = spec;
  Rational factor(1, 2);
  bool coupled = false;
  auto bump = [&](auto& c, Rational contraction) {
    if (!coupled) factor = contraction;
    if (contraction != factor) factor = Rational(1, 2);
    coupled = true;
    ++c.depth;
  };
  auto visit_factor = [&](Factor& f) {
    if (auto* c = std::get_if<CantorFactor>(&f)) bump(*c, (Rational(1) - c->ratio) / Rational(2));
    if (auto* c = std::get_if<FatCantorFactor>(&f)) bump(*c, Rational(1, 2));
  };
  std::visit(
      [&](auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CantorFactor>) {
          bump(s, (Rational(1) - s.ratio) / Rational(2));
        } else if constexpr (std::is_same_v<T, FatCantorFactor>) {
          bump(s, Rational(1, 2));
        } else if constexpr (std::is_same_v<T, ProductSpec>) {
          for (auto& f : s.factors) visit_factor(f);
        } else if constexpr (std::is_same_v<T, CarpetSpec>) {
          bump(s, Rational(1, 3));
        } else if constexpr (std::is_same_v<T, UnionSpec>) {
          for (auto& p : s.parts) {
            if (auto* prod = std::get_if<ProductSpec>(&p.v))
              for (auto& f : prod->factors) visit_factor(f);
            if (auto* c = std::get_if<CantorFactor>(&p.v)) bump(*c, (Rational(1) - c->ratio) / 2);
            if (auto* c = std::get_if<CarpetSpec>(&p.v)) bump(*c, Rational(1, 3));
          }
        }
      },
      next.v);
  return {next, g.with_cell_size(g.h() * factor)};
}

}  // namespace sobrem
