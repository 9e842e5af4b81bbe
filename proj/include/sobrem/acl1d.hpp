#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "sobrem/grid.hpp"
#include "sobrem/parallel.hpp"

namespace sobrem {

/// Samples f(a + i (b - a) / n), i = 0..n.
struct Trace1D {
  double a = 0.0;
  double b = 1.0;
  std::vector<double> samples;

  [[nodiscard]] std::size_t intervals() const { return samples.empty() ? 0 : samples.size() - 1; }
  [[nodiscard]] double step() const { return (b - a) / static_cast<double>(intervals()); }
  [[nodiscard]] double t(std::size_t i) const { return a + step() * static_cast<double>(i); }

  template <class F>
  static Trace1D sample(double a, double b, std::size_t n, F&& f) {
    Trace1D tr{a, b, std::vector<double>(n + 1)};
    for (std::size_t i = 0; i <= n; ++i)
      tr.samples[i] = f(i == n ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n));
    return tr;
  }
};

/// Thrown when a trace jumps too much between samples to be continuous.
class DiscontinuousTrace : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct DecomposeOptions {
  /// Quotients above c * (mean |quotient|) * n^gamma are singular.
  double cutoff_c = 8.0;
  double cutoff_gamma = 0.0;
  /// Quotients at or below this magnitude are never excluded; also the
  /// flatness threshold for the singular part.
  double deriv_tol = 1e-8;
  /// Continuity check: max adjacent jump <= factor * oscillation / sqrt(n).
  double continuity_factor = 4.0;
};

struct Decomposition1D {
  Trace1D ac;
  Trace1D singular;
  /// Difference quotients of the absolutely continuous part.
  std::vector<double> derivative;
  /// 1 where the raw quotient was assigned to the singular part.
  std::vector<std::uint8_t> excluded;
  double cutoff = 0.0;
  double tv_ac = 0.0;
  double tv_singular = 0.0;
  /// max |ac + singular - f|; zero by construction.
  double residual_sup = 0.0;
};

inline double total_variation(std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) s += std::abs(v[i] - v[i - 1]);
  return s;
}

inline void check_trace(const Trace1D& f) {
  if (f.intervals() < 16) throw InvalidArgument("a trace needs at least 16 intervals");
  if (!(f.b > f.a)) throw InvalidArgument("trace interval must have b > a");
  for (double v : f.samples)
    if (!std::isfinite(v)) throw InvalidArgument("trace has non-finite samples");
}

inline void check_continuity(const Trace1D& f, double factor) {
  const auto [mn, mx] = std::minmax_element(f.samples.begin(), f.samples.end());
  const double osc = *mx - *mn;
  double jump = 0.0;
  for (std::size_t i = 1; i < f.samples.size(); ++i)
    jump = std::max(jump, std::abs(f.samples[i] - f.samples[i - 1]));
  const double limit = factor * osc / std::sqrt(static_cast<double>(f.intervals()));
  if (jump > limit)
    throw DiscontinuousTrace("trace is not continuous at sample scale (jump " + std::to_string(jump) +
                             " > " + std::to_string(limit) + ")");
}

/// Heavy-tail cutoff for raw quotients q; mean |q| is the total variation
/// per unit length.
inline double quotient_cutoff(std::span<const double> q, const DecomposeOptions& o) {
  double mean = 0.0;
  for (double v : q) mean += std::abs(v);
  mean /= static_cast<double>(q.size());
  return std::max(o.cutoff_c * mean * std::pow(static_cast<double>(q.size()), o.cutoff_gamma),
                  o.deriv_tol);
}

/// Splits a continuous trace into an absolutely continuous part and a
/// singular remainder. Quotients above the cutoff are replaced by the mean
/// of the nearest kept quotient on each side before integrating; the
/// singular part is f - ac, adjusted in the last bit so that
/// ac + singular reproduces f exactly.
inline Decomposition1D decompose(const Trace1D& f, const DecomposeOptions& o = {}) {
  check_trace(f);
  check_continuity(f, o.continuity_factor);
  const std::size_t n = f.intervals();
  const double h = f.step();
  Decomposition1D d;
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = (f.samples[i + 1] - f.samples[i]) / h;
  d.cutoff = quotient_cutoff(q, o);
  d.excluded.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) d.excluded[i] = std::abs(q[i]) > d.cutoff;

  // Nearest kept quotient to the left and right of every interval.
  std::vector<double> left(n), right(n);
  std::vector<std::uint8_t> has_left(n, 0), has_right(n, 0);
  for (std::size_t i = 0, last = n; i < n; ++i) {
    if (!d.excluded[i]) last = i;
    if (last < n) {
      left[i] = q[last];
      has_left[i] = 1;
    }
  }
  for (std::size_t i = n, last = n; i-- > 0;) {
    if (!d.excluded[i]) last = i;
    if (last < n) {
      right[i] = q[last];
      has_right[i] = 1;
    }
  }
  d.derivative.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!d.excluded[i]) {
      d.derivative[i] = q[i];
    } else if (has_left[i] && has_right[i]) {
      d.derivative[i] = 0.5 * (left[i] + right[i]);
    } else {
      d.derivative[i] = has_left[i] ? left[i] : (has_right[i] ? right[i] : 0.0);
    }
  }

  d.ac = Trace1D{f.a, f.b, std::vector<double>(n + 1)};
  d.singular = Trace1D{f.a, f.b, std::vector<double>(n + 1)};
  d.ac.samples[0] = f.samples[0];
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += d.derivative[i] * h;
    d.ac.samples[i + 1] = f.samples[0] + acc;
  }
  for (std::size_t i = 0; i <= n; ++i) {
    const double fv = f.samples[i];
    double& av = d.ac.samples[i];
    double s = fv - av;
    // If rounding breaks ac + s == f, move ac by a few ulps (its ulp is on
    // the scale of the sum, unlike the ulp of a small s).
    for (int k = 0; k < 8 && av + s != fv; ++k)
      av = std::nextafter(av, (av + s < fv) ? INFINITY : -INFINITY);
    if (av + s != fv) {
      av = fv;
      s = 0.0;
    }
    d.singular.samples[i] = s;
  }
  d.tv_ac = total_variation(d.ac.samples);
  d.tv_singular = total_variation(d.singular.samples);
  for (std::size_t i = 0; i <= n; ++i)
    d.residual_sup = std::max(d.residual_sup,
                              std::abs(d.ac.samples[i] + d.singular.samples[i] - f.samples[i]));
  return d;
}

struct AcScore {
  double score = 1.0;
  bool absolutely_continuous = true;
};

/// score = 1 - TV(singular) / max(TV(f), tol); traces without variation are
/// absolutely continuous with score 1.
inline AcScore is_absolutely_continuous(const Trace1D& f, double tol = 0.01,
                                        const DecomposeOptions& o = {}) {
  check_trace(f);
  const double tv = total_variation(f.samples);
  if (tv == 0.0) return {};
  const Decomposition1D d = decompose(f, o);
  AcScore r;
  r.score = std::clamp(1.0 - d.tv_singular / std::max(tv, tol), 0.0, 1.0);
  r.absolutely_continuous = r.score >= 1.0 - tol;
  return r;
}

// ---------------------------------------------------------------------------
// Cantor function

/// Devil's staircase at x in [0, 1], from up to 60 ternary digits.
inline double cantor_function(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double value = 0.0, scale = 0.5;
  for (int k = 0; k < 60; ++k) {
    x *= 3.0;
    const int digit = static_cast<int>(std::floor(x));
    x -= digit;
    if (digit == 1) return value + scale;
    if (digit == 2) value += scale;
    scale *= 0.5;
  }
  return value;
}

/// Cantor function at the 3^depth + 1 triadic points of [0, 1], evaluated
/// exactly from the ternary digits of the sample index.
inline Trace1D cantor_trace(int depth) {
  if (depth < 0 || depth > 30) throw InvalidArgument("Cantor trace depth must be in [0, 30]");
  std::int64_t n = 1;
  for (int k = 0; k < depth; ++k) n *= 3;
  Trace1D tr{0.0, 1.0, std::vector<double>(static_cast<std::size_t>(n) + 1)};
  for (std::int64_t i = 0; i <= n; ++i) {
    if (i == n) {
      tr.samples[static_cast<std::size_t>(i)] = 1.0;
      continue;
    }
    double value = 0.0, scale = 0.5;
    std::int64_t div = n / 3;
    std::int64_t rem = i;
    for (int k = 0; k < depth; ++k, div /= 3, scale *= 0.5) {
      const std::int64_t digit = rem / div;
      rem %= div;
      if (digit == 1) {
        value += scale;
        break;
      }
      if (digit == 2) value += scale;
    }
    tr.samples[static_cast<std::size_t>(i)] = value;
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Weak derivative check

/// Radial bump exp(-1 / (1 - |x - c|^2 / w^2)) supported in the ball of
/// radius `width` about `center`.
struct TestFunctionSpec {
  std::vector<double> center;
  double width = 0.25;

  [[nodiscard]] double value(std::span<const double> x) const {
    const double s = radius2(x);
    return s < 1.0 ? std::exp(-1.0 / (1.0 - s)) : 0.0;
  }
  [[nodiscard]] double derivative(std::span<const double> x, int j) const {
    const double s = radius2(x);
    if (s >= 1.0) return 0.0;
    const double e = 1.0 - s;
    return -std::exp(-1.0 / e) / (e * e) * 2.0 * (x[j] - center[j]) / (width * width);
  }

 private:
  [[nodiscard]] double radius2(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < center.size(); ++k) {
      const double d = (x[k] - center[k]) / width;
      s += d * d;
    }
    return s;
  }
};

struct WeakDerivativeReport {
  /// |int u D_j phi + int (D_j u) phi| / |phi|_{W^{1,1}} per test.
  std::vector<double> residuals;
  double max_residual = 0.0;
};

/// Pointwise derivative of u along `axis`: forward quotients per grid line
/// (zero extension past the box), with quotients above the line's heavy-
/// tail cutoff set to zero, so jumps do not contribute.
inline GridFunction pointwise_derivative(const GridFunction& u, int axis,
                                         const DecomposeOptions& o = {}) {
  const auto& g = u.geometry();
  GridFunction du(g);
  const std::int64_t len = g.count(axis);
  const std::size_t lines = g.size() / static_cast<std::size_t>(len);
  const double h = g.hd();
  parallel_for(lines, [&](std::size_t li) {
    // Enumerate the line's base index with the scan axis removed.
    Index base{0, 0, 0};
    std::size_t rem = li;
    for (int k = 0; k < kMaxDim; ++k) {
      if (k == axis) continue;
      base[k] = static_cast<std::int64_t>(rem % static_cast<std::size_t>(g.count(k)));
      rem /= static_cast<std::size_t>(g.count(k));
    }
    std::vector<double> q(static_cast<std::size_t>(len));
    for (std::int64_t i = 0; i < len; ++i) {
      Index a = base, b = base;
      a[axis] = i;
      b[axis] = i + 1;
      q[static_cast<std::size_t>(i)] = (u.at(b) - u.at(a)) / h;
    }
    const double cut =
        len > 1 ? quotient_cutoff(std::span(q).first(static_cast<std::size_t>(len - 1)), o)
                : o.deriv_tol;
    for (std::int64_t i = 0; i < len; ++i) {
      Index a = base;
      a[axis] = i;
      const double v = q[static_cast<std::size_t>(i)];
      du[g.linear(a)] = std::abs(v) > cut ? 0.0 : v;
    }
  });
  return du;
}

/// Discrete integration-by-parts defect of u against smooth bumps:
/// the midpoint rule for int u D_j phi with the analytic derivative, and the
/// forward quotient of u paired with phi at the face midpoint for
/// int (D_j u) phi. Normalized by |phi|_{W^{1,1}} from the same quadrature;
/// the common factor h^N cancels.
inline WeakDerivativeReport weak_derivative_residual(const GridFunction& u, int axis,
                                                     std::span<const TestFunctionSpec> tests,
                                                     const DecomposeOptions& o = {}) {
  const auto& g = u.geometry();
  const int n = g.dim();
  if (axis < 0 || axis >= n) throw InvalidArgument("derivative axis out of range");
  for (const auto& t : tests) {
    if (static_cast<int>(t.center.size()) != n) throw InvalidArgument("test function has the wrong dimension");
    if (!(t.width > 0.0)) throw InvalidArgument("test function width must be positive");
    for (int k = 0; k < n; ++k)
      if (t.center[k] - t.width <= g.lo(k).to_double() || t.center[k] + t.width >= g.hi(k).to_double())
        throw InvalidArgument("test function support must lie inside the box");
  }
  const GridFunction du = pointwise_derivative(u, axis, o);
  const double h = g.hd();
  WeakDerivativeReport rep;
  for (const auto& t : tests) {
    const double a = parallel_sum(g.size(), [&](std::size_t idx) {
      const Index i = g.unravel(idx);
      double x[kMaxDim];
      for (int k = 0; k < n; ++k) x[k] = g.center(k, i[k]);
      const std::span<const double> xs(x, static_cast<std::size_t>(n));
      double face[kMaxDim];
      std::copy(x, x + n, face);
      face[axis] += 0.5 * h;
      return u[idx] * t.derivative(xs, axis) +
             du[idx] * t.value(std::span<const double>(face, static_cast<std::size_t>(n)));
    });
    const double norm = parallel_sum(g.size(), [&](std::size_t idx) {
      const Index i = g.unravel(idx);
      double x[kMaxDim];
      for (int k = 0; k < n; ++k) x[k] = g.center(k, i[k]);
      const std::span<const double> xs(x, static_cast<std::size_t>(n));
      double s = std::abs(t.value(xs));
      for (int k = 0; k < n; ++k) s += std::abs(t.derivative(xs, k));
      return s;
    });
    const double r = norm > 0 ? std::abs(a) / norm : 0.0;
    rep.residuals.push_back(r);
    rep.max_residual = std::max(rep.max_residual, r);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Two columns "t,f" with a header row.
inline std::string trace_to_csv(const Trace1D& f) {
  std::string out = "t,f\n";
  for (std::size_t i = 0; i < f.samples.size(); ++i)
    out += detail::fmt_double(f.t(i)) + "," + detail::fmt_double(f.samples[i]) + "\n";
  return out;
}

/// Reads "t,f" rows; a non-numeric first row is a header. The abscissae
/// must be equally spaced to within 1e-9 of the step.
inline Trace1D trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> ts, fs;
  std::size_t row = 0;
  auto parse = [](std::string_view s, double& v) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
  };
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    double t = 0, v = 0;
    const bool ok = comma != std::string::npos && parse(std::string_view(line).substr(0, comma), t) &&
                    parse(std::string_view(line).substr(comma + 1), v);
    if (!ok) {
      if (ts.empty() && row == 1) continue;
      throw InvalidArgument("trace CSV row " + std::to_string(row) + " is not 't,f'");
    }
    ts.push_back(t);
    fs.push_back(v);
  }
  if (ts.size() < 2) throw InvalidArgument("trace CSV needs at least two rows");
  Trace1D tr{ts.front(), ts.back(), std::move(fs)};
  if (!(tr.b > tr.a)) throw InvalidArgument("trace abscissae must increase");
  const double step = tr.step();
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (std::abs(ts[i] - tr.t(i)) > 1e-9 * step + 1e-12 * std::abs(ts[i]))
      throw InvalidArgument("trace abscissae are not equally spaced");
  return tr;
}

/// Columns "t,f,ac,singular".
inline std::string decomposition_to_csv(const Trace1D& f, const Decomposition1D& d) {
  std::string out = "t,f,ac,singular\n";
  for (std::size_t i = 0; i < f.samples.size(); ++i)
    out += detail::fmt_double(f.t(i)) + "," + detail::fmt_double(f.samples[i]) + "," +
           detail::fmt_double(d.ac.samples[i]) + "," + detail::fmt_double(d.singular.samples[i]) + "\n";
  return out;
}

}  // namespace sobrem
