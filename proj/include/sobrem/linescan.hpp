#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sobrem/exact.hpp"
#include "sobrem/grid.hpp"
#include "sobrem/hausdorff.hpp"
#include "sobrem/parallel.hpp"
#include "sobrem/setgen.hpp"

namespace sobrem {

struct ScanOptions {
  std::int64_t n_lines = 256;
  /// Intersections at most this long count as length zero; unset selects 2h,
  /// scaled by |d|_1 / |d|_inf for rotated raster scans.
  std::optional<double> length_tol;
  /// Component count that marks a line as "uncountable-like"; unset selects
  /// max(2, 2^(depth-1)) for exact backends and 16 for raster.
  std::optional<std::int64_t> uncountable_threshold;
  double witness_tol = 0.05;
  /// Unset selects 1 / sqrt(n_lines).
  std::optional<double> fail_tol;
  /// Use the exact backend for axis-aligned scans when K carries one.
  bool prefer_exact = true;
  /// Sampling step of rotated raster scans, in cells.
  double raster_step = 0.5;
  bool keep_lines = true;
};

struct LineRecord {
  std::vector<double> offset;
  double length = 0.0;
  std::int64_t components = 0;
  std::int64_t zero_length_components = 0;
};

struct DirectionReport {
  std::vector<double> direction;
  Backend backend = Backend::Raster;
  std::int64_t lines_sampled = 0;
  std::vector<LineRecord> per_line;
  double frac_meeting = 0.0;
  double frac_positive_length = 0.0;
  double frac_uncountable_proxy = 0.0;
  double length_tol = 0.0;
  std::int64_t uncountable_threshold = 0;
  double h = 0.0;
  /// Largest per-step displacement of a rotated scan in cells; above one a
  /// marked run could be skipped.
  double aliasing_cells = 0.0;
  bool aliasing_flag = false;
};

namespace detail {

inline std::vector<double> unit(std::span<const double> d) {
  double n = 0.0;
  for (double v : d) n += v * v;
  n = std::sqrt(n);
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("scan direction must be a nonzero vector");
  std::vector<double> u(d.begin(), d.end());
  for (double& v : u) v /= n;
  return u;
}

inline int aligned_axis(std::span<const double> d) {
  int axis = -1;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d[k] == 0.0) continue;
    if (axis >= 0) return -1;
    axis = static_cast<int>(k);
  }
  return axis;
}

/// Orthonormal basis of the complement of unit vector d.
inline std::vector<std::vector<double>> transverse_basis(std::span<const double> d) {
  const std::size_t n = d.size();
  std::vector<std::vector<double>> basis;
  for (std::size_t e = 0; e < n && basis.size() + 1 < n; ++e) {
    std::vector<double> v(n, 0.0);
    v[e] = 1.0;
    auto sub = [&](std::span<const double> b) {
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += v[k] * b[k];
      for (std::size_t k = 0; k < n; ++k) v[k] -= dot * b[k];
    };
    sub(d);
    for (const auto& b : basis) sub(b);
    double len = 0.0;
    for (double x : v) len += x * x;
    len = std::sqrt(len);
    if (len < 1e-8) continue;
    for (double& x : v) x /= len;
    basis.push_back(std::move(v));
  }
  return basis;
}

/// Raster runs no longer than the tolerance are crossings of a thin set:
/// one component of length zero.
inline void record_run(LineRecord& rec, double len, double tol) {
  ++rec.components;
  if (len <= tol) {
    ++rec.zero_length_components;
  } else {
    rec.length += len;
  }
}

inline std::int64_t lines_per_axis(std::int64_t n_lines, int transverse_dims) {
  if (transverse_dims <= 1) return n_lines;
  return static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(n_lines)) - 1e-9));
}

}  // namespace detail

/// Statistics of K along a family of parallel lines with direction `dir`.
/// Line offsets are stratified midpoints (2k+1)/(2m) of the box cross-
/// section (an m x m lattice in 3-D). Axis-aligned scans of sets with an
/// exact description use interval arithmetic; everything else walks the
/// raster, rotated lines by nearest-cell sampling.
inline DirectionReport scan_direction(const GridSet& k, std::span<const double> dir,
                                      const ScanOptions& opts = {}) {
  const auto& g = k.geometry();
  const int n = g.dim();
  if (static_cast<int>(dir.size()) != n) throw InvalidArgument("scan direction has the wrong dimension");
  if (opts.n_lines < 64) throw InvalidArgument("a scan needs at least 64 lines");
  DirectionReport rep;
  rep.direction = detail::unit(dir);
  rep.h = g.hd();
  const int axis = detail::aligned_axis(rep.direction);
  const bool exact = axis >= 0 && opts.prefer_exact && k.exact();
  rep.backend = exact ? Backend::Exact : Backend::Raster;

  double l1 = 0.0, linf = 0.0;
  for (double v : rep.direction) {
    l1 += std::abs(v);
    linf = std::max(linf, std::abs(v));
  }
  rep.length_tol = opts.length_tol.value_or(axis >= 0 ? 2.0 * g.hd() : 2.0 * g.hd() * l1 / linf);
  if (opts.uncountable_threshold) {
    rep.uncountable_threshold = *opts.uncountable_threshold;
  } else if (exact) {
    const int depth = k.exact()->depth;
    rep.uncountable_threshold = depth >= 2 ? (std::int64_t{1} << (depth - 1)) : 2;
  } else {
    rep.uncountable_threshold = 16;
  }

  const int tdims = n - 1;
  const std::int64_t m = detail::lines_per_axis(opts.n_lines, tdims);
  const std::int64_t total = tdims == 0 ? 1 : (tdims == 1 ? m : m * m);
  rep.lines_sampled = total;
  std::vector<LineRecord> lines(static_cast<std::size_t>(total));

  auto stratum = [&](std::int64_t i) { return Rational(2 * i + 1, 2 * m); };

  if (axis >= 0) {
    // Transverse axes in increasing order.
    std::vector<int> taxes;
    for (int a = 0; a < n; ++a)
      if (a != axis) taxes.push_back(a);
    parallel_for(static_cast<std::size_t>(total), [&](std::size_t li) {
      LineRecord& rec = lines[li];
      std::vector<Rational> point(static_cast<std::size_t>(n), Rational(0));
      std::int64_t rem = static_cast<std::int64_t>(li);
      for (int t : taxes) {
        const Rational f = stratum(rem % m);
        rem /= m;
        point[t] = g.lo(t) + (g.hi(t) - g.lo(t)) * f;
        rec.offset.push_back(point[t].to_double());
      }
      if (exact) {
        const IntervalList ivs = k.exact()->line(axis, point);
        for (const auto& iv : ivs) {
          rec.length += iv.length().to_double();
          if (iv.degenerate()) ++rec.zero_length_components;
        }
        rec.components = static_cast<std::int64_t>(ivs.size());
        return;
      }
      Index base{0, 0, 0};
      for (int t : taxes)
        base[t] = std::min(((point[t] - g.lo(t)) / g.h()).floor(), g.count(t) - 1);
      std::int64_t run = 0;
      auto close = [&] {
        if (run == 0) return;
        detail::record_run(rec, static_cast<double>(run) * g.hd(), rep.length_tol);
        run = 0;
      };
      for (std::int64_t i = 0; i < g.count(axis); ++i) {
        Index c = base;
        c[axis] = i;
        if (k.marked(c)) {
          ++run;
        } else {
          close();
        }
      }
      close();
    });
  } else {
    const auto basis = detail::transverse_basis(rep.direction);
    // Cross-section extent of the box along each transverse basis vector.
    std::vector<double> lo(basis.size(), 1e300), hi(basis.size(), -1e300);
    std::vector<double> tlo(1, 1e300), thi(1, -1e300);
    for (int corner = 0; corner < (1 << n); ++corner) {
      std::vector<double> x(static_cast<std::size_t>(n));
      for (int a = 0; a < n; ++a)
        x[a] = ((corner >> a) & 1) ? g.hi(a).to_double() : g.lo(a).to_double();
      for (std::size_t b = 0; b < basis.size(); ++b) {
        double s = 0.0;
        for (int a = 0; a < n; ++a) s += x[a] * basis[b][a];
        lo[b] = std::min(lo[b], s);
        hi[b] = std::max(hi[b], s);
      }
    }
    const double step = opts.raster_step * g.hd();
    rep.aliasing_cells = step * linf / g.hd();
    rep.aliasing_flag = rep.aliasing_cells > 1.0;
    parallel_for(static_cast<std::size_t>(total), [&](std::size_t li) {
      LineRecord& rec = lines[li];
      std::vector<double> origin(static_cast<std::size_t>(n), 0.0);
      std::int64_t rem = static_cast<std::int64_t>(li);
      for (std::size_t b = 0; b < basis.size(); ++b) {
        const double s = lo[b] + (hi[b] - lo[b]) * stratum(rem % m).to_double();
        rem /= m;
        rec.offset.push_back(s);
        for (int a = 0; a < n; ++a) origin[a] += s * basis[b][a];
      }
      // Parameter range inside the box (slab clipping).
      double t0 = -1e300, t1 = 1e300;
      for (int a = 0; a < n; ++a) {
        const double d = rep.direction[a];
        const double blo = g.lo(a).to_double(), bhi = g.hi(a).to_double();
        if (d == 0.0) {
          if (origin[a] < blo || origin[a] > bhi) t0 = 1e300;
          continue;
        }
        double ta = (blo - origin[a]) / d, tb = (bhi - origin[a]) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
      }
      if (!(t0 < t1)) return;
      const auto samples = static_cast<std::int64_t>(std::floor((t1 - t0) / step)) + 1;
      std::int64_t run = 0;
      auto close = [&] {
        if (run == 0) return;
        detail::record_run(rec, static_cast<double>(run) * step, rep.length_tol);
        run = 0;
      };
      for (std::int64_t s = 0; s < samples; ++s) {
        const double t = t0 + (static_cast<double>(s) + 0.5) * ((t1 - t0) / static_cast<double>(samples));
        Index c{0, 0, 0};
        for (int a = 0; a < n; ++a) {
          const double x = origin[a] + t * rep.direction[a];
          c[a] = std::clamp<std::int64_t>(
              static_cast<std::int64_t>(std::floor((x - g.lo(a).to_double()) / g.hd())), 0,
              g.count(a) - 1);
        }
        if (k.marked(c)) {
          ++run;
        } else {
          close();
        }
      }
      close();
    });
  }

  std::int64_t meet = 0, positive = 0, proxy = 0;
  for (const auto& rec : lines) {
    if (rec.components > 0) ++meet;
    const bool pos = rec.length > rep.length_tol;
    if (pos) ++positive;
    if (pos || rec.components >= rep.uncountable_threshold) ++proxy;
  }
  const auto nl = static_cast<double>(total);
  rep.frac_meeting = static_cast<double>(meet) / nl;
  rep.frac_positive_length = static_cast<double>(positive) / nl;
  rep.frac_uncountable_proxy = static_cast<double>(proxy) / nl;
  if (opts.keep_lines) rep.per_line = std::move(lines);
  return rep;
}

/// Axes followed by the diagonals (1, 1) and (1, -1) in the first two axes.
inline std::vector<std::vector<double>> default_directions(int dim, bool with_diagonals) {
  std::vector<std::vector<double>> out;
  for (int a = 0; a < dim; ++a) {
    std::vector<double> d(static_cast<std::size_t>(dim), 0.0);
    d[a] = 1.0;
    out.push_back(d);
  }
  if (with_diagonals && dim >= 2) {
    const double r = std::numbers::sqrt2 / 2;
    std::vector<double> a(static_cast<std::size_t>(dim), 0.0), b(a);
    a[0] = r;
    a[1] = r;
    b[0] = r;
    b[1] = -r;
    out.push_back(a);
    out.push_back(b);
  }
  return out;
}

/// Absolute determinant of the matrix with the (normalized) directions as rows.
inline double direction_determinant(const std::vector<std::vector<double>>& dirs) {
  const std::size_t n = dirs.size();
  std::vector<std::vector<double>> m;
  for (const auto& d : dirs) m.push_back(detail::unit(d));
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (m[piv][c] == 0.0) return 0.0;
    std::swap(m[piv], m[c]);
    det *= m[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
    }
  }
  return std::abs(det);
}

struct DirectionCheck {
  DirectionReport coarse;
  DirectionReport fine;
  bool below_fail_tol = false;
  bool non_increasing = false;
  bool pass = false;
};

struct SufficientReport {
  std::vector<DirectionCheck> directions;
  double determinant = 0.0;
  double fail_tol = 0.0;
  bool mixed_backends = false;
  bool pass = false;
  std::string note;
};

/// Line criterion for removability: along N independent directions, the
/// lines meeting K in more than a countable-like set must form a vanishing
/// fraction, at two resolutions with a non-increasing trend.
inline SufficientReport sufficient_check(const GridSet& coarse, const GridSet& fine,
                                         const std::vector<std::vector<double>>& directions,
                                         const ScanOptions& opts = {}) {
  const int n = coarse.geometry().dim();
  if (fine.geometry().dim() != n) throw InvalidArgument("resolutions differ in dimension");
  if (static_cast<int>(directions.size()) != n)
    throw InvalidArgument("sufficient check needs exactly N directions");
  SufficientReport rep;
  rep.determinant = direction_determinant(directions);
  if (rep.determinant < 1e-6) throw InvalidArgument("scan directions are not linearly independent");
  rep.pass = true;
  for (const auto& d : directions) {
    DirectionCheck c{scan_direction(coarse, d, opts), scan_direction(fine, d, opts)};
    rep.fail_tol = opts.fail_tol.value_or(1.0 / std::sqrt(static_cast<double>(c.fine.lines_sampled)));
    if (c.coarse.backend != c.fine.backend) rep.mixed_backends = true;
    c.below_fail_tol = c.fine.frac_uncountable_proxy <= rep.fail_tol;
    c.non_increasing = c.fine.frac_uncountable_proxy <=
                       c.coarse.frac_uncountable_proxy + 1.0 / static_cast<double>(c.fine.lines_sampled);
    c.pass = c.below_fail_tol && c.non_increasing;
    rep.pass = rep.pass && c.pass;
    rep.directions.push_back(std::move(c));
  }
  if (rep.mixed_backends) {
    rep.pass = false;
    rep.note = "resolutions were scanned with different backends";
  } else {
    rep.note = rep.pass ? "all directions below the failure tolerance"
                        : "some direction meets K uncountably on too many lines";
  }
  return rep;
}

struct WitnessReport {
  std::vector<DirectionCheck> directions;
  /// Indices into `directions` of stable witnesses.
  std::vector<std::size_t> witnesses;
  bool found = false;
  std::string note;
};

/// Looks for a direction whose lines meet K uncountably on a fraction of at
/// least witness_tol lines at both resolutions. A witness makes failure of
/// removability possible; its absence proves nothing beyond the scanned
/// directions.
inline WitnessReport necessary_witness_check(const GridSet& coarse, const GridSet& fine,
                                             const std::vector<std::vector<double>>& directions,
                                             const ScanOptions& opts = {}) {
  if (directions.size() < 4) throw InvalidArgument("witness search needs at least 4 directions");
  WitnessReport rep;
  for (const auto& d : directions) {
    DirectionCheck c{scan_direction(coarse, d, opts), scan_direction(fine, d, opts)};
    c.pass = c.coarse.frac_uncountable_proxy >= opts.witness_tol &&
             c.fine.frac_uncountable_proxy >= opts.witness_tol;
    if (c.pass) rep.witnesses.push_back(rep.directions.size());
    rep.directions.push_back(std::move(c));
  }
  rep.found = !rep.witnesses.empty();
  rep.note = rep.found ? "witness direction found" : "no witness found in scanned directions";
  return rep;
}

}  // namespace sobrem
