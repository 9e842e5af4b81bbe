#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "sobrem/grid.hpp"
#include "sobrem/parallel.hpp"
#include "sobrem/setgen.hpp"

namespace sobrem {

// ---------------------------------------------------------------------------
// Discrete Sobolev norm

enum class BoundaryMode {
  /// Values outside the box are zero; differences across the box faces count.
  ZeroExtension,
  /// Only differences between two cells inside the box count.
  InteriorOnly,
};

/// Sum over |alpha| <= 1 of ||D^alpha u||_{L^p}, with D_k the forward
/// difference and ||v||_p = (sum |v|^p h^N)^{1/p}.
inline double sobolev_norm(const GridFunction& u, double p,
                           BoundaryMode mode = BoundaryMode::ZeroExtension) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("sobolev_norm needs finite p >= 1");
  if (!u.all_finite()) throw InvalidArgument("grid function has non-finite values");
  const auto& g = u.geometry();
  const double vol = g.cell_volume();
  const double h = g.hd();
  auto lp = [&](double sum) { return std::pow(sum * vol, 1.0 / p); };

  double total = lp(parallel_sum(g.size(), [&](std::size_t i) { return std::pow(std::abs(u[i]), p); }));
  for (int k = 0; k < g.dim(); ++k) {
    const auto stride = static_cast<std::size_t>(k == 0 ? 1 : (k == 1 ? g.count(0) : g.count(0) * g.count(1)));
    const double s = parallel_sum(g.size(), [&](std::size_t idx) {
      const Index i = g.unravel(idx);
      double acc = 0.0;
      const bool last = i[k] == g.count(k) - 1;
      if (!last) {
        acc += std::pow(std::abs(u[idx + stride] - u[idx]) / h, p);
      } else if (mode == BoundaryMode::ZeroExtension) {
        acc += std::pow(std::abs(u[idx]) / h, p);
      }
      if (i[k] == 0 && mode == BoundaryMode::ZeroExtension) acc += std::pow(std::abs(u[idx]) / h, p);
      return acc;
    });
    total += lp(s);
  }
  return total;
}

/// Upper bound for the sum-of-norms value of a function whose p-energy
/// sum(|grad u|^p + |u|^p) h^N equals `energy`: Hoelder over the N+1 terms,
/// times N^{(1-p/2)/p} when p < 2 to pass from |grad u| to its components.
inline double sum_norm_bound(double energy, double p, int dim) {
  double c = std::pow(1.0 + dim, 1.0 - 1.0 / p);
  if (p < 2.0) c *= std::pow(static_cast<double>(dim), (1.0 - p / 2.0) / p);
  return c * std::pow(energy, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Capacity

enum class CapacityInit {
  /// Indicator of K averaged over the 3^N neighbourhood once.
  Smoothed,
  /// Indicator of K.
  Indicator,
  /// 1 on K, 1/2 elsewhere.
  Half,
};

struct CapacityOptions {
  /// Tolerance on the projected gradient measured against p E(phi) / |phi|,
  /// the size of the full gradient at a minimizer of the p-homogeneous
  /// energy; <= 0 selects 1e-8 for p = 2 and 1e-6 otherwise.
  double kkt_tol = 0.0;
  /// Outer iteration cap; <= 0 selects 50 * sqrt(cells).
  std::int64_t max_iterations = 0;
  /// Conjugate-gradient cap per outer iteration; <= 0 selects 50 * sqrt(cells).
  std::int64_t max_cg_iterations = 0;
  CapacityInit init = CapacityInit::Smoothed;
  /// Required number of unmarked cells between K and the box faces.
  int pad = 1;
  /// Absolute energy tolerance used when comparing estimates.
  double value_tol = 1e-6;
};

struct CapacityBracket {
  double inner = 0.0;
  double outer = 0.0;
};

struct CapacityEstimate {
  /// Minimal energy sum(|grad phi|^p + |phi|^p) h^N.
  double value = 0.0;
  /// value^{1/p}.
  double norm_value = 0.0;
  double p = 2.0;
  double h = 0.0;
  std::int64_t iterations = 0;
  std::int64_t cg_iterations = 0;
  double kkt_residual = 0.0;
  bool converged = true;
  std::optional<CapacityBracket> bracket;
};

struct CapacitySolution {
  CapacityEstimate estimate;
  GridFunction potential;
};

namespace detail {

/// p-energy on a grid with zero extension, its gradient and a regularized
/// Hessian for Newton steps.
class PEnergy {
 public:
  PEnergy(const GridGeometry& g, double p) : g_(g), p_(p), n_(g.size()) {
    dim_ = g.dim();
    stride_[0] = 1;
    stride_[1] = static_cast<std::size_t>(g.count(0));
    stride_[2] = static_cast<std::size_t>(g.count(0) * g.count(1));
    h_ = g.hd();
    vol_ = g.cell_volume();
    first_.resize(n_);
    last_.resize(n_);
    for (std::size_t idx = 0; idx < n_; ++idx) {
      const Index i = g.unravel(idx);
      std::uint8_t f = 0, l = 0;
      for (int k = 0; k < dim_; ++k) {
        if (i[k] == 0) f |= static_cast<std::uint8_t>(1u << k);
        if (i[k] == g.count(k) - 1) l |= static_cast<std::uint8_t>(1u << k);
      }
      first_[idx] = f;
      last_[idx] = l;
    }
  }

  [[nodiscard]] std::size_t size() const { return n_; }

  /// Forward differences at cell idx.
  void grad_at(std::span<const double> x, std::size_t idx, double* gk) const {
    for (int k = 0; k < dim_; ++k) {
      const double nb = (last_[idx] >> k) & 1u ? 0.0 : x[idx + stride_[k]];
      gk[k] = (nb - x[idx]) / h_;
    }
  }

  [[nodiscard]] double energy(std::span<const double> x) const {
    const double s = parallel_sum(n_, [&](std::size_t idx) {
      double gk[kMaxDim];
      grad_at(x, idx, gk);
      double r2 = 0.0;
      for (int k = 0; k < dim_; ++k) r2 += gk[k] * gk[k];
      const double ax = std::abs(x[idx]);
      double e = pw(std::sqrt(r2)) + pw(ax);
      const int ghosts = std::popcount(static_cast<unsigned>(first_[idx]));
      if (ghosts) e += ghosts * pw(ax / h_);
      return e;
    });
    return s * vol_;
  }

  void gradient(std::span<const double> x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t idx = 0; idx < n_; ++idx) {
      double gk[kMaxDim];
      grad_at(x, idx, gk);
      double r2 = 0.0;
      for (int k = 0; k < dim_; ++k) r2 += gk[k] * gk[k];
      if (r2 > 0.0) {
        const double t = p_ * pw_m2(std::sqrt(r2)) * vol_ / h_;
        for (int k = 0; k < dim_; ++k) {
          if (!((last_[idx] >> k) & 1u)) out[idx + stride_[k]] += t * gk[k];
          out[idx] -= t * gk[k];
        }
      }
      const double ax = std::abs(x[idx]);
      if (ax > 0.0) {
        const double sgn = x[idx] > 0 ? 1.0 : -1.0;
        double d = p_ * pw(ax) / ax;
        const int ghosts = std::popcount(static_cast<unsigned>(first_[idx]));
        if (ghosts) d += ghosts * p_ * pw(ax / h_) / ax;
        out[idx] += sgn * d * vol_;
      }
    }
  }

  /// Freezes the Hessian model at x: per-cell isotropic and rank-one weights.
  /// `reg` smooths the singular weights |grad|^{p-2} and |x|^{p-2} for p < 2
  /// (relative to the largest gradient and to 1).
  void set_hessian_point(std::span<const double> x, double reg) {
    a_.assign(n_, 0.0);
    b_.assign(n_, 0.0);
    gsave_.assign(n_ * static_cast<std::size_t>(dim_), 0.0);
    m_.assign(n_, 0.0);
    double gmax = 0.0;
    for (std::size_t idx = 0; idx < n_; ++idx) {
      double gk[kMaxDim];
      grad_at(x, idx, gk);
      double r2 = 0.0;
      for (int k = 0; k < dim_; ++k) r2 += gk[k] * gk[k];
      gmax = std::max(gmax, r2);
    }
    gmax = std::sqrt(gmax);
    const double eps_g = std::max(1e-300, reg * gmax);
    const double eps_x = reg;
    for (std::size_t idx = 0; idx < n_; ++idx) {
      double* gk = &gsave_[idx * static_cast<std::size_t>(dim_)];
      grad_at(x, idx, gk);
      double r2 = 0.0;
      for (int k = 0; k < dim_; ++k) r2 += gk[k] * gk[k];
      const double re2 = r2 + eps_g * eps_g;
      a_[idx] = p_ * std::pow(re2, (p_ - 2.0) / 2.0) * vol_ / (h_ * h_);
      b_[idx] = (p_ - 2.0) / re2;
      const double ax2 = x[idx] * x[idx] + eps_x * eps_x;
      double m = p_ * (p_ - 1.0) * std::pow(ax2, (p_ - 2.0) / 2.0);
      const int ghosts = std::popcount(static_cast<unsigned>(first_[idx]));
      if (ghosts)
        m += ghosts * p_ * (p_ - 1.0) * std::pow(ax2 / (h_ * h_), (p_ - 2.0) / 2.0) / (h_ * h_);
      m_[idx] = m * vol_;
    }
  }

  /// y = H v restricted to rows and columns with frozen[i] == 0.
  void hess_vec(std::span<const double> v, std::span<double> y,
                std::span<const std::uint8_t> frozen) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t idx = 0; idx < n_; ++idx) {
      const double vc = frozen[idx] ? 0.0 : v[idx];
      double dg[kMaxDim];
      double s = 0.0;
      const double* gk = &gsave_[idx * static_cast<std::size_t>(dim_)];
      for (int k = 0; k < dim_; ++k) {
        const bool last = (last_[idx] >> k) & 1u;
        const double nb = last || frozen[idx + stride_[k]] ? 0.0 : v[idx + stride_[k]];
        dg[k] = nb - vc;
        s += gk[k] * dg[k];
      }
      const double a = a_[idx], bs = b_[idx] * s;
      for (int k = 0; k < dim_; ++k) {
        const double w = a * (dg[k] + bs * gk[k]);
        if (!((last_[idx] >> k) & 1u)) y[idx + stride_[k]] += w;
        y[idx] -= w;
      }
      y[idx] += m_[idx] * vc;
    }
    for (std::size_t idx = 0; idx < n_; ++idx)
      if (frozen[idx]) y[idx] = 0.0;
  }

  [[nodiscard]] std::vector<double> hess_diag() const {
    std::vector<double> d(n_, 0.0);
    for (std::size_t idx = 0; idx < n_; ++idx) {
      const double* gk = &gsave_[idx * static_cast<std::size_t>(dim_)];
      double gsum = 0.0;
      for (int k = 0; k < dim_; ++k) gsum += gk[k];
      const double a = a_[idx], b = b_[idx];
      for (int k = 0; k < dim_; ++k)
        if (!((last_[idx] >> k) & 1u)) d[idx + stride_[k]] += a * (1.0 + b * gk[k] * gk[k]);
      // own node: dg = -v for every component
      d[idx] += a * (dim_ + b * gsum * gsum) + m_[idx];
    }
    return d;
  }

 private:
  [[nodiscard]] double pw(double r) const {
    if (p_ == 2.0) return r * r;
    return r > 0.0 ? std::pow(r, p_) : 0.0;
  }
  [[nodiscard]] double pw_m2(double r) const {
    if (p_ == 2.0) return 1.0;
    return std::pow(r, p_ - 2.0);
  }

  GridGeometry g_;
  double p_;
  std::size_t n_;
  int dim_ = 1;
  std::size_t stride_[kMaxDim]{};
  double h_ = 1.0, vol_ = 1.0;
  std::vector<std::uint8_t> first_, last_;
  std::vector<double> a_, b_, gsave_, m_;
};

inline std::vector<double> initial_potential(const GridSet& k, CapacityInit init) {
  const auto& g = k.geometry();
  const std::size_t n = g.size();
  std::vector<double> x(n, 0.0);
  switch (init) {
    case CapacityInit::Indicator:
      for (std::size_t i = 0; i < n; ++i) x[i] = k.marked(i) ? 1.0 : 0.0;
      break;
    case CapacityInit::Half:
      for (std::size_t i = 0; i < n; ++i) x[i] = k.marked(i) ? 1.0 : 0.5;
      break;
    case CapacityInit::Smoothed: {
      const int span = g.dim() >= 3 ? 1 : 0;
      for (std::size_t idx = 0; idx < n; ++idx) {
        if (k.marked(idx)) {
          x[idx] = 1.0;
          continue;
        }
        const Index i = g.unravel(idx);
        int hits = 0, total = 0;
        for (int dz = -span; dz <= span; ++dz)
          for (int dy = (g.dim() >= 2 ? -1 : 0); dy <= (g.dim() >= 2 ? 1 : 0); ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const Index j{i[0] + dx, i[1] + dy, i[2] + dz};
              ++total;
              hits += k.marked(j);
            }
        x[idx] = static_cast<double>(hits) / total;
      }
      break;
    }
  }
  return x;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

}  // namespace detail

/// Minimizes the p-energy over grid functions equal to 1 on the marked
/// cells of K and within [0, 1] elsewhere, returning the minimizer too.
///
/// The solver is a projected Newton method: bound-active cells take a
/// scaled gradient step, the rest a Newton step solved by Jacobi-
/// preconditioned conjugate gradients on a regularized Hessian, followed by
/// an Armijo search along the projection arc. For p = 2 the Hessian is exact
/// and the first step already solves the quadratic problem to tolerance.
inline CapacitySolution solve_capacity(const GridSet& k, double p, const CapacityOptions& opts = {}) {
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("capacity needs finite p > 1");
  const auto& g = k.geometry();
  CapacitySolution sol{CapacityEstimate{}, GridFunction(g)};
  auto& est = sol.estimate;
  est.p = p;
  est.h = g.hd();
  if (k.empty()) return sol;
  if (k.margin() < opts.pad)
    throw InvalidArgument("marked cells come closer than " + std::to_string(opts.pad) +
                          " cells to the box faces");

  const std::size_t n = g.size();
  const double tol = opts.kkt_tol > 0 ? opts.kkt_tol : (p == 2.0 ? 1e-8 : 1e-6);
  const auto root = static_cast<std::int64_t>(std::ceil(50.0 * std::sqrt(static_cast<double>(n))));
  const std::int64_t max_outer = opts.max_iterations > 0 ? opts.max_iterations : root;
  const std::int64_t max_cg = opts.max_cg_iterations > 0 ? opts.max_cg_iterations : root;

  std::vector<std::uint8_t> fixed(k.mask().begin(), k.mask().end());
  detail::PEnergy en(g, p);
  std::vector<double> x = detail::initial_potential(k, opts.init);
  std::vector<double> grad(n), pg(n), d(n), xn(n), r(n), z(n), q(n), s(n);
  std::vector<std::uint8_t> frozen(n);

  auto project = [](double v) { return std::clamp(v, 0.0, 1.0); };
  auto projected_gradient = [&](std::span<const double> xs) {
    for (std::size_t i = 0; i < n; ++i) {
      double gi = fixed[i] ? 0.0 : grad[i];
      if (xs[i] <= 0.0 && gi > 0.0) gi = 0.0;
      if (xs[i] >= 1.0 && gi < 0.0) gi = 0.0;
      pg[i] = gi;
    }
    return detail::norm2(pg);
  };

  double e = en.energy(x);
  en.gradient(x, grad);
  double res = projected_gradient(x);
  auto relative = [&] {
    const double scale = p * e / detail::norm2(x);
    return scale > 0.0 ? res / scale : res;
  };
  est.converged = false;

  for (std::int64_t it = 0;; ++it) {
    est.kkt_residual = relative();
    if (est.kkt_residual <= tol || res == 0.0) {
      est.converged = true;
      break;
    }
    if (it >= max_outer) break;
    est.iterations = it + 1;

    en.set_hessian_point(x, std::clamp(est.kkt_residual, 1e-10, 1e-4));
    const std::vector<double> diag = en.hess_diag();

    // Active bounds (Bertsekas' epsilon rule).
    double width = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!fixed[i]) width = std::max(width, std::abs(x[i] - project(x[i] - grad[i] / diag[i])));
    const double eps = std::min(width, 1e-3);
    for (std::size_t i = 0; i < n; ++i) {
      const bool low = x[i] <= eps && grad[i] > 0.0;
      const bool high = x[i] >= 1.0 - eps && grad[i] < 0.0;
      frozen[i] = fixed[i] || low || high;
    }

    // Newton direction on the free set by PCG.
    const double rel = est.kkt_residual;
    const double eta = p == 2.0 ? std::max(0.25 * tol / rel, 1e-14)
                                : std::clamp(std::sqrt(rel), 0.25 * tol / rel, 0.1);
    std::fill(d.begin(), d.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) r[i] = frozen[i] ? 0.0 : -grad[i];
    const double rhs = detail::norm2(r);
    for (std::size_t i = 0; i < n; ++i) z[i] = frozen[i] ? 0.0 : r[i] / diag[i];
    s = z;
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];
    for (std::int64_t cg = 0; cg < max_cg && detail::norm2(r) > eta * rhs; ++cg) {
      ++est.cg_iterations;
      en.hess_vec(s, q, frozen);
      double sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) sq += s[i] * q[i];
      if (!(sq > 0.0)) break;
      const double alpha = rz / sq;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] += alpha * s[i];
        r[i] -= alpha * q[i];
      }
      double rz_new = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        z[i] = frozen[i] ? 0.0 : r[i] / diag[i];
        rz_new += r[i] * z[i];
      }
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) s[i] = z[i] + beta * s[i];
    }
    for (std::size_t i = 0; i < n; ++i)
      if (frozen[i] && !fixed[i]) d[i] = -grad[i] / diag[i];

    // Armijo search along the projection arc. A full step whose energy
    // change is below rounding is kept when it lowers the residual.
    auto search = [&](std::span<const double> dir, std::vector<double>& out, double& e_out) {
      double t = 1.0;
      for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
        double decrease = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          out[i] = fixed[i] ? 1.0 : project(x[i] + t * dir[i]);
          decrease += grad[i] * (out[i] - x[i]);
        }
        e_out = en.energy(out);
        if (decrease < 0.0 && e_out <= e + 1e-4 * decrease) return t;
        if (ls == 0 && std::abs(e_out - e) <= 1e-13 * std::max(1.0, std::abs(e))) {
          en.gradient(out, q);
          std::swap(grad, q);
          const double res_new = projected_gradient(out);
          std::swap(grad, q);
          if (res_new < res) return t;
        }
      }
      return 0.0;
    };
    double en_new = 0.0;
    double step = search(d, xn, en_new);
    // Near the nonsmooth zero level set (p < 2) the regularized Newton model
    // can be poor enough that only tiny steps pass; a diagonally scaled
    // gradient step then often does much better.
    if (step < 1e-3) {
      for (std::size_t i = 0; i < n; ++i) s[i] = fixed[i] ? 0.0 : -grad[i] / diag[i];
      double en_alt = 0.0;
      const double alt = search(s, z, en_alt);
      if (alt > 0.0 && (step == 0.0 || en_alt < en_new)) {
        step = alt;
        std::swap(xn, z);
        en_new = en_alt;
      }
    }
    const bool accepted = step > 0.0;
    if (accepted) {
      std::swap(x, xn);
      e = en_new;
    }
    en.gradient(x, grad);
    res = projected_gradient(x);
    if (!accepted) {
      est.kkt_residual = relative();
      est.converged = est.kkt_residual <= tol;
      break;
    }
  }

  est.value = e;
  est.norm_value = std::pow(e, 1.0 / p);
  sol.potential = GridFunction(g, std::move(x));
  return sol;
}

/// Discrete (1,p)-capacity of K in energy form. Empty K gives exactly 0
/// without invoking the solver; non-convergence is reported, not thrown.
inline CapacityEstimate estimate_capacity(const GridSet& k, double p,
                                          const CapacityOptions& opts = {}) {
  return solve_capacity(k, p, opts).estimate;
}

// ---------------------------------------------------------------------------
// Morphology and brackets

namespace detail {
template <bool Erode>
GridSet morph(const GridSet& k) {
  const auto& g = k.geometry();
  GridSet out(g);
  const int sy = g.dim() >= 2 ? 1 : 0, sz = g.dim() >= 3 ? 1 : 0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Index i = g.unravel(idx);
    bool any = false, all = true;
    for (int dz = -sz; dz <= sz; ++dz)
      for (int dy = -sy; dy <= sy; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const Index j{i[0] + dx, i[1] + dy, i[2] + dz};
          if (!g.contains(j)) continue;  // box faces are neutral
          const bool m = k.marked(g.linear(j));
          any = any || m;
          all = all && m;
        }
    if (Erode ? all : any) out.mark(idx);
  }
  return out;
}
}  // namespace detail

/// Cells whose whole 3^N neighbourhood inside the box is marked.
inline GridSet erode(const GridSet& k) { return detail::morph<true>(k); }
/// Cells with a marked cell in their 3^N neighbourhood.
inline GridSet dilate(const GridSet& k) { return detail::morph<false>(k); }

/// Inner estimate from the one-cell erosion of M and outer estimate from
/// the one-cell dilation. The outer solve allows one cell less padding.
inline std::pair<CapacityEstimate, CapacityEstimate> capacity_bracket(
    const GridSet& m, double p, const CapacityOptions& opts = {}) {
  CapacityOptions outer_opts = opts;
  outer_opts.pad = std::max(0, opts.pad - 1);
  CapacityEstimate inner = estimate_capacity(erode(m), p, opts);
  CapacityEstimate outer = estimate_capacity(dilate(m), p, outer_opts);
  inner.bracket = outer.bracket = CapacityBracket{inner.value, outer.value};
  return {inner, outer};
}

// ---------------------------------------------------------------------------
// Projection comparison

/// Orthogonal projection of K along `axis` onto one grid layer, placed at
/// the median layer of K's marked cells so that a set already flat in
/// that direction is left unchanged.
inline GridSet project_flat(const GridSet& k, int axis) {
  const auto& g = k.geometry();
  if (axis < 0 || axis >= g.dim()) throw InvalidArgument("projection axis out of range");
  GridSet out(g);
  if (k.empty()) return out;
  std::vector<std::int64_t> layers;
  for (std::size_t idx = 0; idx < g.size(); ++idx)
    if (k.marked(idx)) layers.push_back(g.unravel(idx)[axis]);
  std::nth_element(layers.begin(), layers.begin() + static_cast<std::ptrdiff_t>(layers.size() / 2),
                   layers.end());
  const std::int64_t layer = layers[layers.size() / 2];
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (!k.marked(idx)) continue;
    Index i = g.unravel(idx);
    i[axis] = layer;
    out.mark(i);
  }
  return out;
}

struct ProjectionComparison {
  CapacityEstimate cap_k;
  CapacityEstimate cap_projection;
  /// cap_projection / cap_k; empty when cap_k is zero.
  std::optional<double> ratio;
};

/// Capacity of K against the capacity of its projection along `axis`,
/// both computed on the same N-dimensional grid.
inline ProjectionComparison project_and_compare(const GridSet& k, double p, int axis,
                                                const CapacityOptions& opts = {}) {
  if (k.geometry().dim() < 2) throw InvalidArgument("projection needs N >= 2");
  ProjectionComparison out;
  out.cap_k = estimate_capacity(k, p, opts);
  out.cap_projection = estimate_capacity(project_flat(k, axis), p, opts);
  if (out.cap_k.value > 0.0) out.ratio = out.cap_projection.value / out.cap_k.value;
  return out;
}

struct ProjectionSuiteEntry {
  std::string name;
  ProjectionComparison coarse;
  ProjectionComparison fine;
};

struct ProjectionSuiteReport {
  std::vector<ProjectionSuiteEntry> entries;
  /// Largest ratio over the suite at each resolution: the empirical
  /// projection constant.
  double max_ratio_coarse = 0.0;
  double max_ratio_fine = 0.0;
  /// |fine - coarse| / coarse.
  double variation = 0.0;
  bool finite = true;
};

/// Runs project_and_compare over named (coarse, fine) raster pairs.
struct ProjectionCase {
  std::string name;
  GridSet coarse;
  GridSet fine;
  int axis = 1;
};

inline ProjectionSuiteReport projection_suite(std::span<const ProjectionCase> cases, double p,
                                              const CapacityOptions& opts = {}) {
  ProjectionSuiteReport rep;
  for (const auto& c : cases) {
    ProjectionSuiteEntry e{c.name, project_and_compare(c.coarse, p, c.axis, opts),
                           project_and_compare(c.fine, p, c.axis, opts)};
    if (e.coarse.ratio) rep.max_ratio_coarse = std::max(rep.max_ratio_coarse, *e.coarse.ratio);
    if (e.fine.ratio) rep.max_ratio_fine = std::max(rep.max_ratio_fine, *e.fine.ratio);
    rep.entries.push_back(std::move(e));
  }
  rep.finite = std::isfinite(rep.max_ratio_coarse) && std::isfinite(rep.max_ratio_fine);
  rep.variation = rep.max_ratio_coarse > 0
                      ? std::abs(rep.max_ratio_fine - rep.max_ratio_coarse) / rep.max_ratio_coarse
                      : std::numeric_limits<double>::infinity();
  return rep;
}

// ---------------------------------------------------------------------------
// Refinement study

struct RefinementLevel {
  double h = 0.0;
  CapacityEstimate estimate;
};

/// Capacity of `spec` on `levels` successive refinements, starting at
/// `geometry` and refining with sobrem::refine.
inline std::vector<RefinementLevel> capacity_refinement(const SetSpec& spec,
                                                        const GridGeometry& geometry, int levels,
                                                        double p,
                                                        const CapacityOptions& opts = {}) {
  std::vector<RefinementLevel> out;
  SetSpec s = spec;
  GridGeometry g = geometry;
  for (int l = 0; l < levels; ++l) {
    if (l > 0) std::tie(s, g) = refine(s, g);
    out.push_back({g.hd(), estimate_capacity(generate(s, g), p, opts)});
  }
  return out;
}

}  // namespace sobrem
