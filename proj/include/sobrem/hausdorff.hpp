#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sobrem/capacity.hpp"
#include "sobrem/exact.hpp"
#include "sobrem/grid.hpp"
#include "sobrem/setgen.hpp"

namespace sobrem {

enum class Backend { Exact, Raster };

inline const char* to_string(Backend b) { return b == Backend::Exact ? "exact" : "raster"; }

struct DimensionReport {
  /// Box sides, decreasing.
  std::vector<Rational> scales;
  std::vector<std::int64_t> counts;
  Backend backend = Backend::Raster;
  double dimension = 0.0;
  double fit_r2 = 0.0;
  /// (alpha, N(delta_min) * delta_min^alpha).
  std::vector<std::pair<double, double>> content;
};

namespace detail {

struct BoxKeyHash {
  std::size_t operator()(const Index& i) const {
    std::uint64_t h = 1469598103934665603ull;
    for (auto v : i) h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ull;
    return static_cast<std::size_t>(h);
  }
};

inline std::int64_t count_exact(const ExactSet& e, const Rational& d) {
  const auto lo = e.bounds().first;
  if (lo.empty()) return 0;
  std::unordered_set<Index, BoxKeyHash> boxes;
  for (const auto& cell : e.cells) {
    std::vector<std::int64_t> ranges[kMaxDim];
    bool empty = false;
    for (int k = 0; k < e.dim && !empty; ++k) {
      for (const auto& iv : cell.axes[k]) {
        auto [a, b] = partition_cells(iv, lo[k], d);
        for (auto i = a; i <= b; ++i)
          if (ranges[k].empty() || ranges[k].back() != i) ranges[k].push_back(i);
      }
      empty = ranges[k].empty();
    }
    if (empty) continue;
    for (int k = e.dim; k < kMaxDim; ++k) ranges[k] = {0};
    for (auto z : ranges[2])
      for (auto y : ranges[1])
        for (auto x : ranges[0]) boxes.insert(Index{x, y, z});
  }
  return static_cast<std::int64_t>(boxes.size());
}

inline std::int64_t count_raster(const GridSet& k, std::int64_t m) {
  const auto& g = k.geometry();
  std::unordered_set<Index, BoxKeyHash> boxes;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (!k.marked(idx)) continue;
    const Index i = g.unravel(idx);
    boxes.insert(Index{i[0] / m, i[1] / m, i[2] / m});
  }
  return static_cast<std::int64_t>(boxes.size());
}

}  // namespace detail

/// Counts boxes of side delta that meet K in a fixed partition. Raster
/// partitions are anchored at the grid box's minimum corner and need scales
/// that are multiples of h. The exact backend, used when K carries one,
/// anchors at K's own bounding-box corner (so the count does not depend on
/// where the grid box starts) and accepts any positive scale.
inline DimensionReport box_count(const GridSet& k, std::vector<Rational> scales) {
  const auto& g = k.geometry();
  std::sort(scales.begin(), scales.end(), [](const auto& a, const auto& b) { return b < a; });
  DimensionReport rep;
  rep.backend = k.exact() ? Backend::Exact : Backend::Raster;
  for (const auto& d : scales) {
    if (!(d > Rational(0))) throw InvalidArgument("box-count scales must be positive");
    std::int64_t n = 0;
    if (k.exact()) {
      n = detail::count_exact(*k.exact(), d);
    } else {
      if (d < g.h()) throw InvalidArgument("box-count scale " + d.str() + " is below the cell size");
      const Rational m = d / g.h();
      if (!m.is_integer()) throw InvalidArgument("box-count scale " + d.str() + " is not a multiple of h");
      n = detail::count_raster(k, m.num());
    }
    rep.scales.push_back(d);
    rep.counts.push_back(n);
  }
  return rep;
}

/// Scales base^-first, ..., base^-last.
inline std::vector<Rational> geometric_scales(std::int64_t base, int first, int last) {
  std::vector<Rational> out;
  Rational d(1);
  for (int i = 0; i < first; ++i) d = d / Rational(base);
  for (int i = first; i <= last; ++i, d = d / Rational(base)) out.push_back(d);
  return out;
}

/// Shortest positive interval of a self-similar exact description (counting
/// below it only sees the construction's last level); h otherwise.
inline Rational resolution_limit(const GridSet& k) {
  if (!k.exact() || k.exact()->depth == 0) return k.geometry().h();
  std::optional<Rational> best;
  for (const auto& cell : k.exact()->cells)
    for (int a = 0; a < k.exact()->dim; ++a)
      for (const auto& iv : cell.axes[a])
        if (!iv.degenerate() && (!best || iv.length() < *best)) best = iv.length();
  return best ? *best : k.geometry().h();
}

/// Scales base^-j for j = 0, 1, ... down to the resolution limit, kept
/// within the longest box side.
inline std::vector<Rational> automatic_scales(const GridSet& k, std::int64_t base) {
  if (base < 2) throw InvalidArgument("scale base must be >= 2");
  const auto& g = k.geometry();
  Rational side = g.hi(0) - g.lo(0);
  for (int a = 1; a < g.dim(); ++a) side = max(side, g.hi(a) - g.lo(a));
  const Rational limit = resolution_limit(k);
  std::vector<Rational> out;
  if (k.exact()) {
    Rational d(1);
    while (d > side) d = d / Rational(base);
    for (; d >= limit; d = d / Rational(base)) out.push_back(d);
  } else {
    for (Rational d = g.h(); d <= side; d = d * Rational(base)) out.push_back(d);
  }
  return out;
}

struct SlopeFit {
  double slope = 0.0;
  double r2 = 0.0;
};

/// Least-squares slope of log N against log(1/delta) over all given scales.
inline std::optional<SlopeFit> fit_slope(std::span<const Rational> scales,
                                         std::span<const std::int64_t> counts) {
  const std::size_t n = scales.size();
  if (n < 2) return std::nullopt;
  double sx = 0, sy = 0;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = -std::log(scales[i].to_double());
    ys[i] = std::log(static_cast<double>(std::max<std::int64_t>(counts[i], 1)));
    sx += xs[i];
    sy += ys[i];
  }
  sx /= static_cast<double>(n);
  sy /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - sx) * (xs[i] - sx);
    sxy += (xs[i] - sx) * (ys[i] - sy);
    syy += (ys[i] - sy) * (ys[i] - sy);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return SlopeFit{sxy / sxx, sxy * sxy / (sxx * syy)};
}

/// Fitted box-counting dimension, excluding the two coarsest scales. Needs
/// at least four scales spanning two decades; all-equal counts are a
/// degenerate fit. Fills report.dimension and report.fit_r2.
inline double dimension_estimate(DimensionReport& report) {
  const std::size_t n = report.scales.size();
  if (n < 4) throw InvalidArgument("dimension fit needs at least 4 scales");
  const double span = report.scales.front().to_double() / report.scales.back().to_double();
  if (span < 100.0 * (1.0 - 1e-12)) throw InvalidArgument("dimension fit needs scales spanning two decades");
  const auto fit = fit_slope(std::span(report.scales).subspan(2), std::span(report.counts).subspan(2));
  if (!fit) throw InvalidArgument("degenerate dimension fit: box counts do not vary");
  report.dimension = fit->slope;
  report.fit_r2 = fit->r2;
  return fit->slope;
}

/// N(delta) * delta^alpha for the partition cover at scale delta.
inline double content_at_scale(const GridSet& k, double alpha, const Rational& delta) {
  if (!(alpha > 0.0) || alpha > k.geometry().dim())
    throw InvalidArgument("content exponent must lie in (0, N]");
  const auto rep = box_count(k, {delta});
  return static_cast<double>(rep.counts.front()) * std::pow(delta.to_double(), alpha);
}

inline void fill_content(DimensionReport& rep, std::span<const double> alphas) {
  rep.content.clear();
  if (rep.scales.empty()) return;
  const double d = rep.scales.back().to_double();
  for (double a : alphas)
    rep.content.emplace_back(a, static_cast<double>(rep.counts.back()) * std::pow(d, a));
}

// ---------------------------------------------------------------------------
// Capacity against dimension

struct CapacityDimensionOptions {
  double epsilon = 0.05;
  int levels = 2;
  /// Largest relative change between the last two levels that still counts
  /// as stabilized.
  double stabilization_tol = 0.25;
  /// Required ratio of the floor to the single-point capacity at the same h.
  double point_factor = 10.0;
  CapacityOptions solver;
};

struct CapacityDimensionReport {
  double dimension = 0.0;
  double threshold = 0.0;  // N - p + epsilon
  bool applicable = false;
  std::vector<RefinementLevel> levels;
  /// Single-point reference at the finest level.
  CapacityEstimate point;
  double floor = 0.0;
  double relative_change = 0.0;
  bool stabilized = false;
  bool positive = false;
  bool inconclusive = false;
  bool pass = false;
  std::string note;
};

/// If the dimension of K exceeds N - p + epsilon, a set of zero capacity is
/// impossible, so the refinement study must level off at a floor well above
/// the capacity of a single point at the same resolution. Smaller
/// dimensions pass vacuously. A study that has not levelled off is flagged
/// inconclusive, not failed.
inline CapacityDimensionReport check_capacity_dimension_bound(
    const SetSpec& spec, const GridGeometry& geometry, double dimension, double p,
    std::span<const Rational> point, const CapacityDimensionOptions& opts = {}) {
  CapacityDimensionReport rep;
  rep.dimension = dimension;
  rep.threshold = geometry.dim() - p + opts.epsilon;
  rep.applicable = dimension > rep.threshold;
  if (!rep.applicable) {
    rep.pass = true;
    rep.note = "dimension below N - p + epsilon: zero capacity permitted";
    return rep;
  }
  if (opts.levels < 2) throw InvalidArgument("capacity study needs at least two levels");
  rep.levels = capacity_refinement(spec, geometry, opts.levels, p, opts.solver);
  // Point reference on the finest grid.
  SetSpec s = spec;
  GridGeometry g = geometry;
  for (int l = 1; l < opts.levels; ++l) std::tie(s, g) = refine(s, g);
  ProductSpec pt;
  for (const auto& c : point) pt.factors.emplace_back(PointFactor{c});
  rep.point = estimate_capacity(generate(SetSpec{pt}, g), p, opts.solver);

  bool converged = rep.point.converged;
  rep.floor = rep.levels.front().estimate.value;
  for (const auto& l : rep.levels) {
    rep.floor = std::min(rep.floor, l.estimate.value);
    converged = converged && l.estimate.converged;
  }
  const double prev = rep.levels[rep.levels.size() - 2].estimate.value;
  const double last = rep.levels.back().estimate.value;
  rep.relative_change = prev > 0 ? std::abs(last - prev) / prev : 0.0;
  rep.stabilized = rep.relative_change <= opts.stabilization_tol;
  rep.positive = rep.floor >= opts.point_factor * rep.point.value;
  if (!converged) {
    rep.inconclusive = true;
    rep.note = "a capacity solve did not converge";
  } else if (!rep.positive) {
    rep.note = "capacity floor is not separated from the single-point capacity";
  } else if (!rep.stabilized) {
    rep.inconclusive = true;
    rep.note = "capacity study has not levelled off; refine further";
  } else {
    rep.pass = true;
    rep.note = "capacity floor positive and stable";
  }
  return rep;
}

}  // namespace sobrem
