#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "sobrem/grid.hpp"
#include "sobrem/rational.hpp"

namespace sobrem {

/// Closed interval [lo, hi] with exact endpoints; lo == hi is a point.
struct Interval {
  Rational lo;
  Rational hi;

  [[nodiscard]] Rational length() const { return hi - lo; }
  [[nodiscard]] bool degenerate() const { return lo == hi; }
  [[nodiscard]] bool contains(const Rational& x) const { return lo <= x && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

using IntervalList = std::vector<Interval>;

/// Sorts and merges overlapping or touching closed intervals.
inline IntervalList normalize(IntervalList list) {
  std::sort(list.begin(), list.end(), [](const Interval& a, const Interval& b) {
    return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
  });
  IntervalList out;
  for (const auto& iv : list) {
    if (!out.empty() && iv.lo <= out.back().hi) {
      out.back().hi = max(out.back().hi, iv.hi);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

inline Rational total_length(std::span<const Interval> list) {
  Rational s(0);
  for (const auto& iv : list) s += iv.length();
  return s;
}

/// Membership test on a sorted, merged list.
inline bool contains(std::span<const Interval> list, const Rational& x) {
  auto it = std::upper_bound(list.begin(), list.end(), x,
                             [](const Rational& v, const Interval& iv) { return v < iv.lo; });
  if (it == list.begin()) return false;
  return std::prev(it)->contains(x);
}

/// Cartesian product of one interval list per axis.
struct ProductCell {
  std::vector<IntervalList> axes;
};

/// Finite union of product cells: the exact description of a construction
/// at its stated depth.
struct ExactSet {
  int dim = 0;
  std::vector<ProductCell> cells;
  /// Deepest construction level of any Cantor-type factor; 0 when none.
  int depth = 0;

  [[nodiscard]] bool contains(std::span<const Rational> x) const {
    for (const auto& c : cells) {
      bool in = true;
      for (int k = 0; k < dim && in; ++k) in = sobrem::contains(c.axes[k], x[k]);
      if (in) return true;
    }
    return false;
  }

  /// Axis-aligned bounding box: lo/hi per axis. Requires a nonempty set.
  [[nodiscard]] std::pair<std::vector<Rational>, std::vector<Rational>> bounds() const {
    std::vector<Rational> lo, hi;
    bool first = true;
    for (const auto& c : cells) {
      bool nonempty = true;
      for (const auto& a : c.axes) nonempty = nonempty && !a.empty();
      if (!nonempty) continue;
      for (int k = 0; k < dim; ++k) {
        const Rational a = c.axes[k].front().lo;
        const Rational b = c.axes[k].back().hi;
        if (first) {
          lo.push_back(a);
          hi.push_back(b);
        } else {
          lo[k] = min(lo[k], a);
          hi[k] = max(hi[k], b);
        }
      }
      first = false;
    }
    return {lo, hi};
  }

  [[nodiscard]] bool empty() const {
    for (const auto& c : cells) {
      bool nonempty = true;
      for (const auto& a : c.axes) nonempty = nonempty && !a.empty();
      if (nonempty) return false;
    }
    return true;
  }

  /// Intersection with the line parallel to `axis` through the point whose
  /// other coordinates are `transverse` (indexed by axis; entry `axis` is
  /// ignored). Result is sorted, disjoint and merged.
  [[nodiscard]] IntervalList line(int axis, std::span<const Rational> transverse) const {
    IntervalList out;
    for (const auto& c : cells) {
      bool hit = true;
      for (int k = 0; k < dim && hit; ++k)
        if (k != axis) hit = sobrem::contains(c.axes[k], transverse[k]);
      if (hit) out.insert(out.end(), c.axes[axis].begin(), c.axes[axis].end());
    }
    return normalize(std::move(out));
  }
};

/// Index range [first, last] of grid cells (origin `lo`, size `h`) covering
/// an interval under the marking rule: a nondegenerate interval marks the
/// cells it overlaps with positive length; a point marks the cell containing
/// it, or both neighbours when it sits on a cell boundary. Not clipped.
inline std::pair<std::int64_t, std::int64_t> cover_cells(const Interval& iv, const Rational& lo,
                                                         const Rational& h) {
  const Rational ta = (iv.lo - lo) / h;
  const Rational tb = (iv.hi - lo) / h;
  if (iv.degenerate()) {
    if (ta.is_integer()) return {ta.num() - 1, ta.num()};
    return {ta.floor(), ta.floor()};
  }
  return {ta.floor(), tb.ceil() - 1};
}

/// Index range of half-open partition boxes [lo + i*d, lo + (i+1)*d) that
/// meet an interval: points land in exactly one box, nondegenerate intervals
/// count boxes overlapped with positive length.
inline std::pair<std::int64_t, std::int64_t> partition_cells(const Interval& iv,
                                                             const Rational& lo,
                                                             const Rational& d) {
  const Rational ta = (iv.lo - lo) / d;
  if (iv.degenerate()) return {ta.floor(), ta.floor()};
  const Rational tb = (iv.hi - lo) / d;
  return {ta.floor(), tb.ceil() - 1};
}

}  // namespace sobrem
