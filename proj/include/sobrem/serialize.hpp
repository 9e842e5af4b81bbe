#pragma once

// JSON forms of set specifications, geometries, options and reports.
// Rationals are written as "p/q" strings and read from strings or numbers.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sobrem/acl1d.hpp"
#include "sobrem/capacity.hpp"
#include "sobrem/grid.hpp"
#include "sobrem/hausdorff.hpp"
#include "sobrem/linescan.hpp"
#include "sobrem/rational.hpp"
#include "sobrem/setgen.hpp"
#include "sobrem/verdict.hpp"

namespace sobrem {

using Json = nlohmann::json;

/// Thrown for configuration documents of the wrong shape.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

namespace detail {

inline void reject_unknown(const Json& j, std::initializer_list<const char*> allowed,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <class T>
void read_opt(const Json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  T v{};
  read_opt(j, key, v);
  out = v;
}

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + " needs '" + key + "'");
  return j.at(key);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Rational

inline void to_json(Json& j, const Rational& r) { j = r.str(); }

inline void from_json(const Json& j, Rational& r) {
  if (j.is_string()) {
    r = Rational::parse(j.get<std::string>());
  } else if (j.is_number_integer()) {
    r = Rational(j.get<std::int64_t>());
  } else if (j.is_number()) {
    // Shortest round-trip decimal of the double, read exactly.
    r = Rational::parse(j.dump());
  } else {
    throw ConfigError("expected a rational number, got " + j.dump());
  }
}

// ---------------------------------------------------------------------------
// Set specifications

inline void to_json(Json& j, const Factor& f) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, IntervalFactor>) {
          j = Json{{"type", "interval"}, {"a", x.a}, {"b", x.b}};
        } else if constexpr (std::is_same_v<T, PointFactor>) {
          j = Json{{"type", "point"}, {"x", x.x}};
        } else if constexpr (std::is_same_v<T, CantorFactor>) {
          j = Json{{"type", "cantor"}, {"ratio", x.ratio}, {"depth", x.depth}, {"a", x.a}, {"b", x.b}};
        } else {
          j = Json{{"type", "fat_cantor"}, {"ratio", x.ratio}, {"depth", x.depth}, {"a", x.a}, {"b", x.b}};
        }
      },
      f);
}

namespace detail {

template <class C>
C cantor_like_from_json(const Json& j, const std::string& where, bool typed) {
  if (typed)
    reject_unknown(j, {"type", "ratio", "depth", "a", "b"}, where);
  else
    reject_unknown(j, {"kind", "ratio", "depth", "a", "b"}, where);
  C c;
  read_opt(j, "ratio", c.ratio);
  read_opt(j, "depth", c.depth);
  read_opt(j, "a", c.a);
  read_opt(j, "b", c.b);
  return c;
}

}  // namespace detail

inline void from_json(const Json& j, Factor& f) {
  const std::string type = detail::require(j, "type", "factor").get<std::string>();
  if (type == "interval") {
    detail::reject_unknown(j, {"type", "a", "b"}, "interval factor");
    IntervalFactor x;
    detail::read_opt(j, "a", x.a);
    detail::read_opt(j, "b", x.b);
    f = x;
  } else if (type == "point") {
    detail::reject_unknown(j, {"type", "x"}, "point factor");
    PointFactor x;
    detail::read_opt(j, "x", x.x);
    f = x;
  } else if (type == "cantor") {
    f = detail::cantor_like_from_json<CantorFactor>(j, "cantor factor", true);
  } else if (type == "fat_cantor") {
    f = detail::cantor_like_from_json<FatCantorFactor>(j, "fat_cantor factor", true);
  } else {
    throw ConfigError("unknown factor type '" + type + "'");
  }
}

inline void to_json(Json& j, const SetSpec& spec) {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CantorFactor> || std::is_same_v<T, FatCantorFactor>) {
          j = Json(Factor{s});
          j.erase("type");
        } else if constexpr (std::is_same_v<T, ProductSpec>) {
          j = Json{{"factors", s.factors}};
        } else if constexpr (std::is_same_v<T, SegmentSpec>) {
          j = Json{{"from", s.from}, {"to", s.to}};
        } else if constexpr (std::is_same_v<T, DiskSpec>) {
          j = Json{{"center", s.center}, {"radius", s.radius}};
        } else if constexpr (std::is_same_v<T, ArcSpec>) {
          j = Json{{"center", s.center}, {"radius", s.radius}, {"theta0", s.theta0}, {"theta1", s.theta1}};
        } else if constexpr (std::is_same_v<T, JuliaSpec>) {
          j = Json{{"c", {s.c.real(), s.c.imag()}},
                   {"escape_radius", s.escape_radius},
                   {"max_iterations", s.max_iterations}};
        } else if constexpr (std::is_same_v<T, CarpetSpec>) {
          j = Json{{"depth", s.depth}, {"a", s.a}, {"b", s.b}};
        } else if constexpr (std::is_same_v<T, BitmapSpec>) {
          j = Json{{"path", s.path}};
        } else {
          j = Json{{"parts", s.parts}};
        }
      },
      spec.v);
  j["kind"] = spec.kind();
}

inline void from_json(const Json& j, SetSpec& spec) {
  using detail::read_opt;
  using detail::reject_unknown;
  const std::string kind = detail::require(j, "kind", "set").get<std::string>();
  if (kind == "cantor") {
    spec.v = detail::cantor_like_from_json<CantorFactor>(j, "cantor set", false);
  } else if (kind == "fat_cantor") {
    spec.v = detail::cantor_like_from_json<FatCantorFactor>(j, "fat_cantor set", false);
  } else if (kind == "product") {
    reject_unknown(j, {"kind", "factors"}, "product set");
    ProductSpec s;
    read_opt(j, "factors", s.factors);
    spec.v = s;
  } else if (kind == "segment") {
    reject_unknown(j, {"kind", "from", "to"}, "segment");
    SegmentSpec s;
    s.from = detail::require(j, "from", "segment").get<std::vector<Rational>>();
    s.to = detail::require(j, "to", "segment").get<std::vector<Rational>>();
    spec.v = s;
  } else if (kind == "disk") {
    reject_unknown(j, {"kind", "center", "radius"}, "disk");
    DiskSpec s;
    s.center = detail::require(j, "center", "disk").get<std::vector<double>>();
    s.radius = detail::require(j, "radius", "disk").get<double>();
    spec.v = s;
  } else if (kind == "arc") {
    reject_unknown(j, {"kind", "center", "radius", "theta0", "theta1"}, "arc");
    ArcSpec s;
    read_opt(j, "center", s.center);
    read_opt(j, "radius", s.radius);
    read_opt(j, "theta0", s.theta0);
    read_opt(j, "theta1", s.theta1);
    spec.v = s;
  } else if (kind == "julia") {
    reject_unknown(j, {"kind", "c", "escape_radius", "max_iterations"}, "julia set");
    JuliaSpec s;
    if (j.contains("c")) {
      const auto c = j.at("c").get<std::vector<double>>();
      if (c.size() != 2) throw ConfigError("julia parameter c must be [re, im]");
      s.c = {c[0], c[1]};
    }
    read_opt(j, "escape_radius", s.escape_radius);
    read_opt(j, "max_iterations", s.max_iterations);
    spec.v = s;
  } else if (kind == "carpet") {
    reject_unknown(j, {"kind", "depth", "a", "b"}, "carpet");
    CarpetSpec s;
    read_opt(j, "depth", s.depth);
    read_opt(j, "a", s.a);
    read_opt(j, "b", s.b);
    spec.v = s;
  } else if (kind == "bitmap") {
    reject_unknown(j, {"kind", "path"}, "bitmap");
    spec.v = BitmapSpec{detail::require(j, "path", "bitmap").get<std::string>()};
  } else if (kind == "union") {
    reject_unknown(j, {"kind", "parts"}, "union");
    UnionSpec s;
    s.parts = detail::require(j, "parts", "union").get<std::vector<SetSpec>>();
    spec.v = s;
  } else {
    throw ConfigError("unknown set kind '" + kind + "'");
  }
}

// ---------------------------------------------------------------------------
// Geometry

inline Json geometry_json(const GridGeometry& g) {
  Json lo = Json::array(), hi = Json::array();
  for (int k = 0; k < g.dim(); ++k) {
    lo.push_back(g.lo(k));
    hi.push_back(g.hi(k));
  }
  return Json{{"lo", lo}, {"hi", hi}, {"h", g.h()}, {"counts", [&] {
                 Json c = Json::array();
                 for (int k = 0; k < g.dim(); ++k) c.push_back(g.count(k));
                 return c;
               }()}};
}

inline GridGeometry geometry_from_json(const Json& j) {
  detail::reject_unknown(j, {"lo", "hi", "h", "counts"}, "geometry");
  const auto lo = detail::require(j, "lo", "geometry").get<std::vector<Rational>>();
  const auto hi = detail::require(j, "hi", "geometry").get<std::vector<Rational>>();
  const auto h = detail::require(j, "h", "geometry").get<Rational>();
  return GridGeometry(lo, hi, h);
}

// ---------------------------------------------------------------------------
// Options

inline const char* to_string(CapacityInit i) {
  switch (i) {
    case CapacityInit::Smoothed: return "smoothed";
    case CapacityInit::Indicator: return "indicator";
    case CapacityInit::Half: return "half";
  }
  return "?";
}

inline CapacityInit capacity_init_from_string(const std::string& s) {
  if (s == "smoothed") return CapacityInit::Smoothed;
  if (s == "indicator") return CapacityInit::Indicator;
  if (s == "half") return CapacityInit::Half;
  throw ConfigError("unknown initialization '" + s + "'");
}

inline void to_json(Json& j, const CapacityOptions& o) {
  j = Json{{"kkt_tol", o.kkt_tol},           {"max_iterations", o.max_iterations},
           {"max_cg_iterations", o.max_cg_iterations}, {"init", to_string(o.init)},
           {"pad", o.pad},                   {"value_tol", o.value_tol}};
}

inline void from_json(const Json& j, CapacityOptions& o) {
  detail::reject_unknown(j, {"kkt_tol", "max_iterations", "max_cg_iterations", "init", "pad", "value_tol"},
                         "capacity options");
  detail::read_opt(j, "kkt_tol", o.kkt_tol);
  detail::read_opt(j, "max_iterations", o.max_iterations);
  detail::read_opt(j, "max_cg_iterations", o.max_cg_iterations);
  if (j.contains("init")) o.init = capacity_init_from_string(j.at("init").get<std::string>());
  detail::read_opt(j, "pad", o.pad);
  detail::read_opt(j, "value_tol", o.value_tol);
}

inline void to_json(Json& j, const ScanOptions& o) {
  j = Json{{"n_lines", o.n_lines},
           {"length_tol", detail::optional_json(o.length_tol)},
           {"uncountable_threshold", detail::optional_json(o.uncountable_threshold)},
           {"witness_tol", o.witness_tol},
           {"fail_tol", detail::optional_json(o.fail_tol)},
           {"prefer_exact", o.prefer_exact},
           {"raster_step", o.raster_step},
           {"keep_lines", o.keep_lines}};
}

inline void from_json(const Json& j, ScanOptions& o) {
  detail::reject_unknown(j, {"n_lines", "length_tol", "uncountable_threshold", "witness_tol", "fail_tol",
                             "prefer_exact", "raster_step", "keep_lines"},
                         "scan options");
  detail::read_opt(j, "n_lines", o.n_lines);
  detail::read_opt(j, "length_tol", o.length_tol);
  detail::read_opt(j, "uncountable_threshold", o.uncountable_threshold);
  detail::read_opt(j, "witness_tol", o.witness_tol);
  detail::read_opt(j, "fail_tol", o.fail_tol);
  detail::read_opt(j, "prefer_exact", o.prefer_exact);
  detail::read_opt(j, "raster_step", o.raster_step);
  detail::read_opt(j, "keep_lines", o.keep_lines);
}

inline void to_json(Json& j, const DecomposeOptions& o) {
  j = Json{{"cutoff_c", o.cutoff_c},
           {"cutoff_gamma", o.cutoff_gamma},
           {"deriv_tol", o.deriv_tol},
           {"continuity_factor", o.continuity_factor}};
}

inline void from_json(const Json& j, DecomposeOptions& o) {
  detail::reject_unknown(j, {"cutoff_c", "cutoff_gamma", "deriv_tol", "continuity_factor"},
                         "decomposition options");
  detail::read_opt(j, "cutoff_c", o.cutoff_c);
  detail::read_opt(j, "cutoff_gamma", o.cutoff_gamma);
  detail::read_opt(j, "deriv_tol", o.deriv_tol);
  detail::read_opt(j, "continuity_factor", o.continuity_factor);
}

/// Verdict settings; scan and solver options travel in their own sections.
inline Json verdict_settings_json(const VerdictConfig& c) {
  return Json{{"measure_shell_factor", c.measure_shell_factor},
              {"measure_retention", c.measure_retention},
              {"sufficient_directions", c.sufficient_directions},
              {"witness_directions", c.witness_directions},
              {"capacity", c.capacity},
              {"capacity_max_cells", c.capacity_max_cells},
              {"dimension", c.dimension}};
}

inline void read_verdict_settings(const Json& j, VerdictConfig& c) {
  detail::reject_unknown(j, {"measure_shell_factor", "measure_retention", "sufficient_directions",
                             "witness_directions", "capacity", "capacity_max_cells", "dimension"},
                         "verdict options");
  detail::read_opt(j, "measure_shell_factor", c.measure_shell_factor);
  detail::read_opt(j, "measure_retention", c.measure_retention);
  detail::read_opt(j, "sufficient_directions", c.sufficient_directions);
  detail::read_opt(j, "witness_directions", c.witness_directions);
  detail::read_opt(j, "capacity", c.capacity);
  detail::read_opt(j, "capacity_max_cells", c.capacity_max_cells);
  detail::read_opt(j, "dimension", c.dimension);
}

// ---------------------------------------------------------------------------
// Reports

inline void to_json(Json& j, const CapacityEstimate& e) {
  j = Json{{"value", e.value},
           {"norm_value", e.norm_value},
           {"p", e.p},
           {"h", e.h},
           {"iterations", e.iterations},
           {"cg_iterations", e.cg_iterations},
           {"kkt_residual", e.kkt_residual},
           {"converged", e.converged},
           {"bracket", e.bracket ? Json{{"inner", e.bracket->inner}, {"outer", e.bracket->outer}}
                                 : Json(nullptr)}};
}

inline void to_json(Json& j, const RefinementLevel& l) { j = Json{{"h", l.h}, {"estimate", l.estimate}}; }

inline void to_json(Json& j, const DimensionReport& r) {
  Json content = Json::array();
  for (const auto& [a, c] : r.content) content.push_back(Json{{"alpha", a}, {"content", c}});
  j = Json{{"backend", to_string(r.backend)},
           {"scales", r.scales},
           {"counts", r.counts},
           {"dimension", r.dimension},
           {"fit_r2", r.fit_r2},
           {"content", content}};
}

/// Per-line records are left to the CSV dumps.
inline void to_json(Json& j, const DirectionReport& r) {
  j = Json{{"direction", r.direction},
           {"backend", to_string(r.backend)},
           {"lines_sampled", r.lines_sampled},
           {"frac_meeting", r.frac_meeting},
           {"frac_positive_length", r.frac_positive_length},
           {"frac_uncountable_proxy", r.frac_uncountable_proxy},
           {"length_tol", r.length_tol},
           {"uncountable_threshold", r.uncountable_threshold},
           {"h", r.h},
           {"aliasing_cells", r.aliasing_cells},
           {"aliasing_flag", r.aliasing_flag}};
}

inline void to_json(Json& j, const DirectionCheck& c) {
  j = Json{{"coarse", c.coarse},
           {"fine", c.fine},
           {"below_fail_tol", c.below_fail_tol},
           {"non_increasing", c.non_increasing},
           {"pass", c.pass}};
}

inline void to_json(Json& j, const SufficientReport& r) {
  j = Json{{"directions", r.directions},     {"determinant", r.determinant}, {"fail_tol", r.fail_tol},
           {"mixed_backends", r.mixed_backends}, {"pass", r.pass},           {"note", r.note}};
}

inline void to_json(Json& j, const WitnessReport& r) {
  j = Json{{"directions", r.directions}, {"witnesses", r.witnesses}, {"found", r.found}, {"note", r.note}};
}

/// Summary numbers only; the traces go to CSV.
inline Json decomposition_summary(const Decomposition1D& d) {
  std::size_t excluded = 0;
  double ac_sup = 0.0, singular_sup = 0.0;
  for (auto e : d.excluded) excluded += e;
  for (double v : d.ac.samples) ac_sup = std::max(ac_sup, std::abs(v));
  for (double v : d.singular.samples) singular_sup = std::max(singular_sup, std::abs(v));
  return Json{{"intervals", d.ac.intervals()},
              {"cutoff", d.cutoff},
              {"excluded_quotients", excluded},
              {"tv_ac", d.tv_ac},
              {"tv_singular", d.tv_singular},
              {"ac_sup", ac_sup},
              {"singular_sup", singular_sup},
              {"residual_sup", d.residual_sup}};
}

inline void to_json(Json& j, const WeakDerivativeReport& r) {
  j = Json{{"residuals", r.residuals}, {"max_residual", r.max_residual}};
}

inline void to_json(Json& j, const Verdict& v) {
  Json checks = Json::array();
  for (const auto& c : v.checks) checks.push_back(Json{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  Json measure{{"coarse", v.measure.coarse},   {"fine", v.measure.fine},
               {"floor", v.measure.floor},     {"h_coarse", v.measure.h_coarse},
               {"h_fine", v.measure.h_fine},   {"persists", v.measure.persists}};
  Json capacity = nullptr;
  if (v.capacity_coarse || v.capacity_fine)
    capacity = Json{{"coarse", v.capacity_coarse ? Json(*v.capacity_coarse) : Json(nullptr)},
                    {"fine", v.capacity_fine ? Json(*v.capacity_fine) : Json(nullptr)}};
  j = Json{{"label", to_string(v.label)},
           {"p", v.p},
           {"evidence",
            {{"measure", measure},
             {"capacity", capacity},
             {"dimension", v.dimension ? Json(*v.dimension) : Json(nullptr)},
             {"sufficient", v.sufficient ? Json(*v.sufficient) : Json(nullptr)},
             {"witness", v.witness ? Json(*v.witness) : Json(nullptr)},
             {"checks", checks}}},
           {"errors", v.errors},
           {"config_echo",
            {{"verdict", verdict_settings_json(v.config)},
             {"scan", v.config.scan},
             {"capacity", v.config.solver}}}};
}

}  // namespace sobrem
