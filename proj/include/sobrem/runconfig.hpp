#pragma once

// Command configuration: one JSON document per run, key=value overrides on
// top, every default written out after load so the echoed document
// reproduces the run.

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "sobrem/io.hpp"
#include "sobrem/serialize.hpp"

namespace sobrem {

struct WeakDerivativeConfig {
  /// "none", "sin" (u = sin x1) or "jump" (u = [x1 > 1/2]) on the unit square.
  std::string field = "none";
  Rational h{1, 256};
  int axis = 0;
};

struct AclConfig {
  /// Trace source: "cantor", "linear", "sin", "constant", "linear_plus_cantor" or "csv".
  std::string function = "cantor";
  /// Two-column (t, f) CSV for function = "csv".
  std::string input;
  /// Cantor depth; the trace has 3^depth intervals.
  int depth = 8;
  /// Intervals for the analytic traces.
  std::int64_t n = 6561;
  double ac_tol = 0.01;
  DecomposeOptions decompose;
  WeakDerivativeConfig weak;
};

struct RunConfig {
  std::string command;
  std::optional<SetSpec> set;
  std::optional<GridGeometry> geometry;
  double p = 2.0;
  int jobs = 0;
  /// Output directory; empty selects $SOBREM_OUT_DIR, then the working directory.
  std::string out_dir;
  /// File stem; empty selects the command name.
  std::string prefix;

  // cap
  int levels = 2;
  bool bracket = false;
  CapacityOptions capacity;

  // dim
  /// Box sides; empty selects h * base^k for k = 0, 1, ... up to the box side.
  std::vector<Rational> scales;
  std::int64_t scale_base = 2;
  std::vector<double> alphas{0.5, 1.0, 1.5};

  // scan
  ScanOptions scan;
  /// Empty selects the axes and the diagonals.
  std::vector<std::vector<double>> directions;
  /// Also run the sufficient and witness checks against the refined set.
  bool scan_checks = false;

  AclConfig acl;
  VerdictConfig verdict;
};

/// Default box [-m, 1 + m]^N: m is the smallest multiple of h that is at
/// least 1/4, so the unit cube sits inside with a quarter margin.
inline Rational default_margin(const Rational& h) {
  if (!(h > Rational(0))) throw ConfigError("cell size must be positive");
  return h * Rational((Rational(1, 4) / h).ceil());
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"gen", "cap", "dim", "scan", "acl", "classify"};
  return names;
}

inline Json run_config_json(const RunConfig& c) {
  return Json{{"command", c.command},
              {"set", c.set ? Json(*c.set) : Json(nullptr)},
              {"geometry", c.geometry ? geometry_json(*c.geometry) : Json(nullptr)},
              {"p", c.p},
              {"jobs", c.jobs},
              {"out_dir", c.out_dir},
              {"prefix", c.prefix},
              {"levels", c.levels},
              {"bracket", c.bracket},
              {"capacity", c.capacity},
              {"scales", c.scales},
              {"scale_base", c.scale_base},
              {"alphas", c.alphas},
              {"scan", c.scan},
              {"directions", c.directions},
              {"scan_checks", c.scan_checks},
              {"acl",
               {{"function", c.acl.function},
                {"input", c.acl.input},
                {"depth", c.acl.depth},
                {"n", c.acl.n},
                {"ac_tol", c.acl.ac_tol},
                {"decompose", c.acl.decompose},
                {"weak", {{"field", c.acl.weak.field}, {"h", c.acl.weak.h}, {"axis", c.acl.weak.axis}}}}},
              {"verdict", verdict_settings_json(c.verdict)}};
}

inline RunConfig run_config_from_json(const Json& j) {
  using detail::read_opt;
  detail::reject_unknown(j, {"command", "set", "geometry", "p", "jobs", "out_dir", "prefix", "levels",
                             "bracket", "capacity", "scales", "scale_base", "alphas", "scan",
                             "directions", "scan_checks", "acl", "verdict"},
                         "run configuration");
  RunConfig c;
  try {
    read_opt(j, "command", c.command);
    if (j.contains("set") && !j.at("set").is_null()) c.set = j.at("set").get<SetSpec>();
    if (j.contains("geometry") && !j.at("geometry").is_null()) {
      // Missing corners or cell size take the defaults of the set's dimension.
      Json g = j.at("geometry");
      if (g.is_object() && (!g.contains("lo") || !g.contains("hi") || !g.contains("h"))) {
        const int n = c.set ? spec_dimension(*c.set) : 0;
        if (n < 1 && (!g.contains("lo") || !g.contains("hi")))
          throw ConfigError("geometry needs lo and hi for this set");
        if (!g.contains("h")) g["h"] = Rational(1, 64);
        const Rational m = default_margin(g.at("h").get<Rational>());
        if (!g.contains("lo")) g["lo"] = std::vector<Rational>(static_cast<std::size_t>(n), -m);
        if (!g.contains("hi")) g["hi"] = std::vector<Rational>(static_cast<std::size_t>(n), Rational(1) + m);
      }
      c.geometry = geometry_from_json(g);
    }
    read_opt(j, "p", c.p);
    read_opt(j, "jobs", c.jobs);
    read_opt(j, "out_dir", c.out_dir);
    read_opt(j, "prefix", c.prefix);
    read_opt(j, "levels", c.levels);
    read_opt(j, "bracket", c.bracket);
    read_opt(j, "capacity", c.capacity);
    read_opt(j, "scales", c.scales);
    read_opt(j, "scale_base", c.scale_base);
    read_opt(j, "alphas", c.alphas);
    read_opt(j, "scan", c.scan);
    read_opt(j, "directions", c.directions);
    read_opt(j, "scan_checks", c.scan_checks);
    if (j.contains("acl")) {
      const Json& a = j.at("acl");
      detail::reject_unknown(a, {"function", "input", "depth", "n", "ac_tol", "decompose", "weak"}, "acl");
      read_opt(a, "function", c.acl.function);
      read_opt(a, "input", c.acl.input);
      read_opt(a, "depth", c.acl.depth);
      read_opt(a, "n", c.acl.n);
      read_opt(a, "ac_tol", c.acl.ac_tol);
      read_opt(a, "decompose", c.acl.decompose);
      if (a.contains("weak")) {
        const Json& w = a.at("weak");
        detail::reject_unknown(w, {"field", "h", "axis"}, "acl.weak");
        read_opt(w, "field", c.acl.weak.field);
        read_opt(w, "h", c.acl.weak.h);
        read_opt(w, "axis", c.acl.weak.axis);
      }
    }
    if (j.contains("verdict")) read_verdict_settings(j.at("verdict"), c.verdict);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
  return c;
}

namespace detail {

/// Override values are JSON when they parse as JSON, strings otherwise, so
/// `depth=5`, `h=1/64` and `directions=[[1,0]]` all work unquoted.
inline Json override_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return Json(text);
  }
}

}  // namespace detail

/// Applies `key=value` with a dotted key path. A first component that is not
/// a top-level key addresses the set, so `depth=5` means `set.depth=5`. A
/// bare word (no '=') names the set kind.
inline void apply_override(Json& doc, const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos) {
    if (item.empty()) throw ConfigError("empty override");
    if (!doc.contains("set") || !doc["set"].is_object() || doc["set"].value("kind", "") != item)
      doc["set"] = Json{{"kind", item}};
    return;
  }
  const std::string key = item.substr(0, eq);
  if (key.empty()) throw ConfigError("override '" + item + "' has no key");
  std::vector<std::string> path;
  for (std::size_t start = 0;;) {
    const auto dot = key.find('.', start);
    path.push_back(key.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  static const std::vector<std::string> top{"command", "set", "geometry", "p", "jobs", "out_dir",
                                            "prefix", "levels", "bracket", "capacity", "scales",
                                            "scale_base", "alphas", "scan", "directions",
                                            "scan_checks", "acl", "verdict"};
  if (std::find(top.begin(), top.end(), path.front()) == top.end()) path.insert(path.begin(), "set");
  Json* node = &doc;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (path[i].empty()) throw ConfigError("override '" + item + "' has an empty key component");
    Json& next = (*node)[path[i]];
    if (next.is_null()) next = Json::object();
    if (!next.is_object()) throw ConfigError("override '" + item + "' descends into a non-object");
    node = &next;
  }
  (*node)[path.back()] = detail::override_value(item.substr(eq + 1));
}

/// Fills defaults that depend on other fields: the geometry (the default
/// box at h = 1/64, or the bitmap's own grid), the output
/// directory and the file stem.
inline void finalize(RunConfig& c) {
  if (c.out_dir.empty()) {
    const char* env = std::getenv("SOBREM_OUT_DIR");
    c.out_dir = env && *env ? env : ".";
  }
  if (c.prefix.empty()) c.prefix = c.command;
  if (c.set && !c.geometry) {
    if (const auto* b = std::get_if<BitmapSpec>(&c.set->v)) {
      c.geometry = read_raster(b->path).geometry();
    } else {
      const int n = spec_dimension(*c.set);
      if (n < 1 || n > kMaxDim) throw ConfigError("cannot infer a geometry for this set");
      const Rational h(1, 64);
      c.geometry = GridGeometry::cube(n, -default_margin(h), Rational(1) + default_margin(h), h);
    }
  }
  if (!(c.p > 1.0)) throw ConfigError("p must exceed 1");
  if (c.jobs < 0) throw ConfigError("jobs must be >= 0");
}

/// Defaults, then the document, then the overrides.
inline RunConfig load_run_config(const std::optional<std::string>& path, const std::string& command,
                                 const std::vector<std::string>& overrides) {
  Json doc = Json::object();
  if (path) {
    const std::string text = read_file(*path);
    try {
      doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ConfigError("config '" + *path + "': " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config '" + *path + "' is not a JSON object");
  }
  // Set kinds first so `depth=5 cantor` and `cantor depth=5` agree.
  for (const auto& o : overrides)
    if (o.find('=') == std::string::npos) apply_override(doc, o);
  for (const auto& o : overrides)
    if (o.find('=') != std::string::npos) apply_override(doc, o);
  doc["command"] = command;
  RunConfig c = run_config_from_json(doc);
  finalize(c);
  return c;
}

}  // namespace sobrem
