// sobrem: command-line front end. One subcommand per analysis; each reads a
// JSON config plus key=value overrides and writes JSON and CSV results into
// the output directory.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sobrem/sobrem.hpp"

namespace fs = std::filesystem;
using namespace sobrem;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kNoConvergence = 3, kIo = 4 };

struct Output {
  fs::path dir;
  std::string prefix;
  std::vector<std::string> written;

  fs::path path(const std::string& suffix) const { return dir / (prefix + suffix); }

  void write(const std::string& suffix, const std::string& bytes) {
    const fs::path p = path(suffix);
    write_file(p.string(), bytes);
    written.push_back(p.string());
  }
  void write_json(const std::string& suffix, const Json& j) { write(suffix, j.dump(2) + "\n"); }
};

Output open_output(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + c.out_dir + "': " + ec.message());
  return Output{c.out_dir, c.prefix, {}};
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const SetSpec& require_set(const RunConfig& c) {
  if (!c.set) throw ConfigError("this command needs a set (a kind such as 'cantor' or a 'set' section)");
  return *c.set;
}

GridSet build_set(const RunConfig& c) { return generate(require_set(c), *c.geometry); }

// ---------------------------------------------------------------------------

int cmd_gen(const RunConfig& c, Output& out) {
  const GridSet k = build_set(c);
  out.write(".pgm", to_pgm(k));
  out.write(".rle", to_rle(k));
  const auto& g = k.geometry();
  out.write_json(".json", Json{{"config", run_config_json(c)},
                               {"set",
                                {{"dim", g.dim()},
                                 {"geometry", geometry_json(g)},
                                 {"marked_cells", k.marked_count()},
                                 {"measure", discrete_measure(k)},
                                 {"exact_backend", k.exact() != nullptr}}}});
  return kOk;
}

int cmd_cap(const RunConfig& c, Output& out) {
  if (c.levels < 1) throw ConfigError("levels must be >= 1");
  const auto levels = capacity_refinement(require_set(c), *c.geometry, c.levels, c.p, c.capacity);
  bool converged = true;
  std::string csv = "h,value,iterations,residual\n";
  for (const auto& l : levels) {
    converged = converged && l.estimate.converged;
    csv += num(l.h) + "," + num(l.estimate.value) + "," + std::to_string(l.estimate.iterations) + "," +
           num(l.estimate.kkt_residual) + "\n";
  }
  Json doc{{"config", run_config_json(c)}, {"estimate", levels.front().estimate}, {"refinement", levels}};
  if (c.bracket) {
    const auto [inner, outer] = capacity_bracket(build_set(c), c.p, c.capacity);
    converged = converged && inner.converged && outer.converged;
    doc["bracket"] = Json{{"inner", inner}, {"outer", outer}};
  } else {
    doc["bracket"] = nullptr;
  }
  out.write("_refinement.csv", csv);
  out.write_json(".json", doc);
  return converged ? kOk : kNoConvergence;
}

int cmd_dim(const RunConfig& c, Output& out) {
  const GridSet k = build_set(c);
  const auto scales = c.scales.empty() ? automatic_scales(k, c.scale_base) : c.scales;
  DimensionReport rep = box_count(k, scales);
  dimension_estimate(rep);
  fill_content(rep, c.alphas);
  std::string counts = "delta,count\n";
  for (std::size_t i = 0; i < rep.scales.size(); ++i)
    counts += num(rep.scales[i].to_double()) + "," + std::to_string(rep.counts[i]) + "\n";
  std::string content = "alpha,content\n";
  for (const auto& [a, v] : rep.content) content += num(a) + "," + num(v) + "\n";
  out.write("_counts.csv", counts);
  out.write("_content.csv", content);
  out.write_json(".json", Json{{"config", run_config_json(c)}, {"report", rep}});
  return kOk;
}

std::string lines_csv(const DirectionReport& r) {
  std::string s;
  const std::size_t offsets = r.per_line.empty() ? 0 : r.per_line.front().offset.size();
  for (std::size_t k = 0; k < offsets; ++k) s += "offset_" + std::to_string(k) + ",";
  s += "length,components,zero_length_components\n";
  for (const auto& l : r.per_line) {
    for (double o : l.offset) s += num(o) + ",";
    s += num(l.length) + "," + std::to_string(l.components) + "," + std::to_string(l.zero_length_components) +
         "\n";
  }
  return s;
}

int cmd_scan(const RunConfig& c, Output& out) {
  const GridSet k = build_set(c);
  const int n = k.geometry().dim();
  const auto dirs = c.directions.empty() ? default_directions(n, true) : c.directions;
  Json reports = Json::array();
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const DirectionReport r = scan_direction(k, dirs[i], c.scan);
    if (c.scan.keep_lines) out.write("_lines_" + std::to_string(i) + ".csv", lines_csv(r));
    reports.push_back(r);
  }
  Json doc{{"config", run_config_json(c)}, {"directions", reports}, {"sufficient", nullptr}, {"witness", nullptr}};
  if (c.scan_checks) {
    const auto [fspec, fgeom] = refine(*c.set, *c.geometry);
    const GridSet fine = generate(fspec, fgeom);
    doc["sufficient"] = sufficient_check(k, fine, default_directions(n, false), c.scan);
    doc["witness"] = necessary_witness_check(k, fine, dirs, c.scan);
  }
  out.write_json(".json", doc);
  return kOk;
}

Trace1D acl_trace(const AclConfig& a) {
  const auto n = static_cast<std::size_t>(a.n);
  if (a.function == "cantor") return cantor_trace(a.depth);
  if (a.function == "linear_plus_cantor") {
    Trace1D t = cantor_trace(a.depth);
    for (std::size_t i = 0; i < t.samples.size(); ++i) t.samples[i] += t.t(i);
    return t;
  }
  if (a.function == "linear") return Trace1D::sample(0.0, 1.0, n, [](double t) { return t; });
  if (a.function == "sin")
    return Trace1D::sample(0.0, 2.0 * std::numbers::pi, n, [](double t) { return std::sin(t); });
  if (a.function == "constant") return Trace1D::sample(0.0, 1.0, n, [](double) { return 1.0; });
  if (a.function == "csv") {
    if (a.input.empty()) throw ConfigError("acl.function = csv needs acl.input");
    return trace_from_csv(read_file(a.input));
  }
  throw ConfigError("unknown acl.function '" + a.function + "'");
}

/// Bumps well inside the unit square.
std::vector<TestFunctionSpec> weak_tests() {
  return {{{0.5, 0.5}, 0.25}, {{0.3, 0.6}, 0.2}, {{0.7, 0.35}, 0.15}, {{0.45, 0.7}, 0.2}};
}

int cmd_acl(const RunConfig& c, Output& out) {
  const Trace1D f = acl_trace(c.acl);
  const Decomposition1D d = decompose(f, c.acl.decompose);
  const AcScore score = is_absolutely_continuous(f, c.acl.ac_tol, c.acl.decompose);
  out.write("_decomposition.csv", decomposition_to_csv(f, d));
  Json doc{{"config", run_config_json(c)},
           {"decomposition", decomposition_summary(d)},
           {"absolutely_continuous", {{"score", score.score}, {"value", score.absolutely_continuous}}},
           {"weak_derivative", nullptr}};
  const auto& w = c.acl.weak;
  if (w.field != "none") {
    const auto g = GridGeometry::cube(2, Rational(0), Rational(1), w.h);
    GridFunction u;
    if (w.field == "sin") {
      u = GridFunction::sample(g, [](std::span<const double> x) { return std::sin(x[0]); });
    } else if (w.field == "jump") {
      u = GridFunction::sample(g, [](std::span<const double> x) { return x[0] > 0.5 ? 1.0 : 0.0; });
    } else {
      throw ConfigError("unknown acl.weak.field '" + w.field + "'");
    }
    const auto tests = weak_tests();
    doc["weak_derivative"] = weak_derivative_residual(u, w.axis, tests, c.acl.decompose);
  }
  out.write_json(".json", doc);
  return kOk;
}

int cmd_classify(const RunConfig& c, Output& out) {
  VerdictConfig vc = c.verdict;
  vc.scan = c.scan;
  vc.solver = c.capacity;
  const Verdict v = classify(require_set(c), *c.geometry, c.p, vc);
  out.write(".txt", summary(v));
  out.write_json(".json", Json{{"config", run_config_json(c)}, {"verdict", v}});
  bool converged = true;
  for (const auto& e : v.errors) converged = converged && e.rfind("capacity:", 0) != 0;
  return converged ? kOk : kNoConvergence;
}

int dispatch(const RunConfig& c) {
  if (c.jobs > 0) set_max_jobs(c.jobs);
  Output out = open_output(c);
  int code = kFailure;
  if (c.command == "gen") code = cmd_gen(c, out);
  else if (c.command == "cap") code = cmd_cap(c, out);
  else if (c.command == "dim") code = cmd_dim(c, out);
  else if (c.command == "scan") code = cmd_scan(c, out);
  else if (c.command == "acl") code = cmd_acl(c, out);
  else if (c.command == "classify") code = cmd_classify(c, out);
  for (const auto& p : out.written) std::cout << p << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical removability laboratory for Sobolev spaces"};
  app.require_subcommand(1);
  struct Args {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<int> jobs;
    std::string out;
    bool print_config = false;
  };
  std::vector<std::pair<CLI::App*, std::unique_ptr<Args>>> subs;
  const char* help[] = {"rasterize a set to PGM and run-length files", "capacity estimate and refinement study",
                        "box-counting dimension", "line-intersection scans",
                        "AC/singular decomposition of a trace", "removability verdict"};
  for (std::size_t i = 0; i < command_names().size(); ++i) {
    auto args = std::make_unique<Args>();
    CLI::App* s = app.add_subcommand(command_names()[i], help[i]);
    s->add_option("--config,-c", args->config, "JSON configuration file");
    s->add_option("--jobs,-j", args->jobs, "worker thread cap");
    s->add_option("--out,-o", args->out, "output directory (default $SOBREM_OUT_DIR or .)");
    s->add_flag("--print-config", args->print_config, "print the effective configuration and exit");
    s->add_option("overrides", args->overrides, "set kind and key=value overrides");
    subs.emplace_back(s, std::move(args));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  try {
    for (auto& [s, a] : subs) {
      if (!s->parsed()) continue;
      std::vector<std::string> overrides = a->overrides;
      if (a->jobs) overrides.push_back("jobs=" + std::to_string(*a->jobs));
      if (!a->out.empty()) overrides.push_back("out_dir=" + Json(a->out).dump());
      const RunConfig cfg = load_run_config(
          a->config.empty() ? std::nullopt : std::optional<std::string>(a->config), s->get_name(), overrides);
      if (a->print_config) {
        std::cout << run_config_json(cfg).dump(2) << "\n";
        return kOk;
      }
      return dispatch(cfg);
    }
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const Json::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
