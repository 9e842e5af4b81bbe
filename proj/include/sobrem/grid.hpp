#pragma once

#include <algorithm>
#include <array>
#include <initializer_list>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sobrem/rational.hpp"

namespace sobrem {

inline constexpr int kMaxDim = 3;

/// Thrown for malformed inputs: bad parameters, geometry mismatches, sets
/// that do not fit their box.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Index = std::array<std::int64_t, kMaxDim>;

/// Uniform cell grid over an axis-aligned box in R^N, N <= 3.
///
/// The box origin and cell size are exact rationals so that construction
/// coordinates map onto cell indices without rounding. Cell i along an axis
/// covers the closed interval [lo + i*h, lo + (i+1)*h]. Unused axes have
/// extent 1 so that linear indexing is uniform.
class GridGeometry {
 public:
  GridGeometry() = default;

  /// Box [lo, hi] with cell size h. Each side must be a positive integer
  /// multiple of h.
  GridGeometry(std::span<const Rational> lo, std::span<const Rational> hi, Rational h)
      : dim_(static_cast<int>(lo.size())), h_(h) {
    if (dim_ < 1 || dim_ > kMaxDim) throw InvalidArgument("grid dimension must be 1, 2 or 3");
    if (hi.size() != lo.size()) throw InvalidArgument("box corners differ in dimension");
    if (h <= Rational(0)) throw InvalidArgument("cell size must be positive");
    for (int k = 0; k < kMaxDim; ++k) {
      if (k < dim_) {
        const Rational cells = (hi[k] - lo[k]) / h;
        if (!cells.is_integer() || cells.num() <= 0)
          throw InvalidArgument("box side " + std::to_string(k) +
                                " is not a positive integer multiple of h");
        lo_[k] = lo[k];
        n_[k] = cells.num();
      } else {
        lo_[k] = Rational(0);
        n_[k] = 1;
      }
    }
    if (static_cast<double>(n_[0]) * static_cast<double>(n_[1]) * static_cast<double>(n_[2]) >
        static_cast<double>(max_cells()))
      throw InvalidArgument("grid exceeds the cell budget");
  }

  GridGeometry(std::initializer_list<Rational> lo, std::initializer_list<Rational> hi, Rational h)
      : GridGeometry(std::span<const Rational>(lo.begin(), lo.size()),
                     std::span<const Rational>(hi.begin(), hi.size()), h) {}

  /// Cube [lo, hi]^dim.
  static GridGeometry cube(int dim, Rational lo, Rational hi, Rational h) {
    std::vector<Rational> a(static_cast<std::size_t>(dim), lo);
    std::vector<Rational> b(static_cast<std::size_t>(dim), hi);
    return GridGeometry(a, b, h);
  }

  /// Upper bound on total cells; guards against runaway allocations.
  static constexpr std::int64_t max_cells() { return std::int64_t{1} << 28; }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const Rational& h() const { return h_; }
  [[nodiscard]] double hd() const { return h_.to_double(); }
  [[nodiscard]] const Rational& lo(int k) const { return lo_[static_cast<std::size_t>(k)]; }
  [[nodiscard]] Rational hi(int k) const { return lo(k) + h_ * Rational(count(k)); }
  [[nodiscard]] std::int64_t count(int k) const { return n_[static_cast<std::size_t>(k)]; }
  [[nodiscard]] const Index& counts() const { return n_; }
  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(n_[0] * n_[1] * n_[2]);
  }
  /// Volume of one cell, h^N.
  [[nodiscard]] double cell_volume() const { return std::pow(hd(), dim_); }

  [[nodiscard]] std::size_t linear(const Index& i) const {
    return static_cast<std::size_t>(i[0] + n_[0] * (i[1] + n_[1] * i[2]));
  }
  [[nodiscard]] Index unravel(std::size_t idx) const {
    Index i{};
    auto r = static_cast<std::int64_t>(idx);
    i[0] = r % n_[0];
    r /= n_[0];
    i[1] = r % n_[1];
    i[2] = r / n_[1];
    return i;
  }
  [[nodiscard]] bool contains(const Index& i) const {
    for (int k = 0; k < kMaxDim; ++k)
      if (i[k] < 0 || i[k] >= n_[k]) return false;
    return true;
  }

  /// Coordinate of the centre of cell index `i` along axis k.
  [[nodiscard]] double center(int k, std::int64_t i) const {
    return lo(k).to_double() + (static_cast<double>(i) + 0.5) * hd();
  }
  [[nodiscard]] double corner(int k, std::int64_t i) const {
    return lo(k).to_double() + static_cast<double>(i) * hd();
  }

  /// Same box at cell size h / factor.
  [[nodiscard]] GridGeometry refined(Rational factor = Rational(2)) const {
    return with_cell_size(h_ / factor);
  }
  [[nodiscard]] GridGeometry with_cell_size(Rational h) const {
    std::vector<Rational> a, b;
    for (int k = 0; k < dim_; ++k) {
      a.push_back(lo(k));
      b.push_back(hi(k));
    }
    return GridGeometry(a, b, h);
  }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;

 private:
  int dim_ = 0;
  std::array<Rational, kMaxDim> lo_{};
  Index n_{1, 1, 1};
  Rational h_{1};
};

struct ExactSet;  // exact.hpp

/// Rasterized compact set: a membership mask over the cells of a grid.
///
/// Cells are marked so that every point of the represented set lies in some
/// marked closed cell. When the set came from a construction with an exact
/// description (Cantor-type products, axis-aligned segments, carpets) the
/// description travels with the raster for interval-exact line queries.
class GridSet {
 public:
  GridSet() = default;
  explicit GridSet(GridGeometry g) : geom_(std::move(g)), mask_(geom_.size(), 0) {}
  GridSet(GridGeometry g, std::vector<std::uint8_t> mask)
      : geom_(std::move(g)), mask_(std::move(mask)) {
    if (mask_.size() != geom_.size()) throw InvalidArgument("mask size does not match grid");
    for (auto& m : mask_) m = m ? 1 : 0;
  }

  [[nodiscard]] const GridGeometry& geometry() const { return geom_; }
  [[nodiscard]] std::span<const std::uint8_t> mask() const { return mask_; }
  [[nodiscard]] bool marked(std::size_t idx) const { return mask_[idx] != 0; }
  [[nodiscard]] bool marked(const Index& i) const {
    return geom_.contains(i) && mask_[geom_.linear(i)] != 0;
  }
  void mark(const Index& i) { mask_[geom_.linear(i)] = 1; }
  void mark(std::size_t idx) { mask_[idx] = 1; }
  void unmark(std::size_t idx) { mask_[idx] = 0; }

  [[nodiscard]] std::size_t marked_count() const {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
  }
  [[nodiscard]] bool empty() const { return marked_count() == 0; }

  [[nodiscard]] const std::shared_ptr<const ExactSet>& exact() const { return exact_; }
  void set_exact(std::shared_ptr<const ExactSet> e) { exact_ = std::move(e); }

  /// Number of cells between the marked cells and the box boundary, minimum
  /// over axes and sides. Returns -1 for an empty set.
  [[nodiscard]] std::int64_t margin() const {
    std::int64_t best = -1;
    for (std::size_t idx = 0; idx < mask_.size(); ++idx) {
      if (!mask_[idx]) continue;
      const Index i = geom_.unravel(idx);
      std::int64_t m = INT64_MAX;
      for (int k = 0; k < geom_.dim(); ++k)
        m = std::min({m, i[k], geom_.count(k) - 1 - i[k]});
      best = best < 0 ? m : std::min(best, m);
    }
    return best;
  }

  friend bool operator==(const GridSet& a, const GridSet& b) {
    return a.geom_ == b.geom_ && a.mask_ == b.mask_;
  }

 private:
  GridGeometry geom_;
  std::vector<std::uint8_t> mask_;
  std::shared_ptr<const ExactSet> exact_;
};

/// Real values per cell, implicitly zero outside the box.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(GridGeometry g, double fill = 0.0)
      : geom_(std::move(g)), values_(geom_.size(), fill) {}
  GridFunction(GridGeometry g, std::vector<double> values)
      : geom_(std::move(g)), values_(std::move(values)) {
    if (values_.size() != geom_.size()) throw InvalidArgument("value count does not match grid");
  }

  /// Samples `f` at cell centres.
  template <class F>
  static GridFunction sample(const GridGeometry& g, F&& f) {
    GridFunction u(g);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      const Index i = g.unravel(idx);
      std::array<double, kMaxDim> x{};
      for (int k = 0; k < g.dim(); ++k) x[k] = g.center(k, i[k]);
      u.values_[idx] = f(std::span<const double>(x.data(), static_cast<std::size_t>(g.dim())));
    }
    return u;
  }

  [[nodiscard]] const GridGeometry& geometry() const { return geom_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<double> values() { return values_; }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  /// Value with zero extension outside the box.
  [[nodiscard]] double at(const Index& i) const {
    return geom_.contains(i) ? values_[geom_.linear(i)] : 0.0;
  }
  [[nodiscard]] bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  GridGeometry geom_;
  std::vector<double> values_;
};

}  // namespace sobrem
