#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sobrem/capacity.hpp"
#include "sobrem/hausdorff.hpp"
#include "sobrem/linescan.hpp"
#include "sobrem/setgen.hpp"

namespace sobrem {

enum class Label {
  NotRemovableMeasure,
  RemovableSufficient,
  WitnessFoundInconclusive,
  NoWitnessInconclusive,
};

inline const char* to_string(Label l) {
  switch (l) {
    case Label::NotRemovableMeasure: return "NOT_REMOVABLE_MEASURE";
    case Label::RemovableSufficient: return "REMOVABLE_SUFFICIENT";
    case Label::WitnessFoundInconclusive: return "WITNESS_FOUND_INCONCLUSIVE";
    case Label::NoWitnessInconclusive: return "NO_WITNESS_INCONCLUSIVE";
  }
  return "?";
}

struct VerdictConfig {
  /// Floor = max(shell_factor * h^N * sqrt(coarse count), retention * coarse measure).
  double measure_shell_factor = 4.0;
  double measure_retention = 0.85;
  ScanOptions scan;
  /// Directions for the sufficient check; empty selects the axes.
  std::vector<std::vector<double>> sufficient_directions;
  /// Directions for the witness search; empty selects axes plus diagonals.
  std::vector<std::vector<double>> witness_directions;
  bool capacity = true;
  /// Capacity solves are skipped above this many cells.
  std::size_t capacity_max_cells = std::size_t{1} << 18;
  CapacityOptions solver;
  bool dimension = true;
};

struct CheckRecord {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct MeasureEvidence {
  double coarse = 0.0;
  double fine = 0.0;
  double floor = 0.0;
  double h_coarse = 0.0;
  double h_fine = 0.0;
  bool persists = false;
};

struct Verdict {
  Label label = Label::NoWitnessInconclusive;
  double p = 2.0;
  MeasureEvidence measure;
  std::optional<CapacityEstimate> capacity_coarse;
  std::optional<CapacityEstimate> capacity_fine;
  std::optional<DimensionReport> dimension;
  std::optional<SufficientReport> sufficient;
  std::optional<WitnessReport> witness;
  std::vector<CheckRecord> checks;
  std::vector<std::string> errors;
  VerdictConfig config;
};

namespace detail {

inline std::optional<DimensionReport> verdict_dimension(const GridSet& coarse, const GridSet& fine,
                                                        std::vector<std::string>& errors) {
  const auto& g = fine.geometry();
  // Counted on the fine set; the partition base follows the refinement
  // factor (3 for triadic sets).
  const Rational ratio = coarse.geometry().h() / g.h();
  const std::int64_t base = ratio.is_integer() && ratio.num() >= 2 ? ratio.num() : 2;
  Rational side = g.hi(0) - g.lo(0);
  for (int k = 1; k < g.dim(); ++k) side = max(side, g.hi(k) - g.lo(k));
  std::vector<Rational> scales;
  for (Rational d = g.h(); d <= side; d = d * Rational(base)) scales.push_back(d);
  try {
    DimensionReport rep = box_count(fine, scales);
    dimension_estimate(rep);
    return rep;
  } catch (const std::exception& e) {
    errors.push_back(std::string("dimension: ") + e.what());
    return std::nullopt;
  }
}

}  // namespace detail

/// Decision tree over the evidence from K at two resolutions: persistent
/// measure, then the line criterion for removability, then the witness
/// search. Only the measure test can establish non-removability; a witness
/// leaves the question open. Every sub-analysis runs and is recorded; a
/// failing one is logged in `errors` and cannot support a label.
inline Verdict classify(const GridSet& coarse, const GridSet& fine, double p,
                        const VerdictConfig& config = {}) {
  if (!(p > 1.0)) throw InvalidArgument("classification needs p > 1");
  Verdict v;
  v.p = p;
  v.config = config;
  const int n = coarse.geometry().dim();

  auto& m = v.measure;
  m.coarse = discrete_measure(coarse);
  m.fine = discrete_measure(fine);
  m.h_coarse = coarse.geometry().hd();
  m.h_fine = fine.geometry().hd();
  m.floor = std::max(config.measure_shell_factor * coarse.geometry().cell_volume() *
                         std::sqrt(static_cast<double>(coarse.marked_count())),
                     config.measure_retention * m.coarse);
  m.persists = m.fine > 0.0 && m.fine >= m.floor;
  v.checks.push_back({"measure", m.persists,
                      "fine measure " + std::to_string(m.fine) + " vs floor " + std::to_string(m.floor)});

  if (config.capacity) {
    for (auto [set, slot] : {std::pair{&coarse, &v.capacity_coarse}, std::pair{&fine, &v.capacity_fine}}) {
      if (set->geometry().size() > config.capacity_max_cells) {
        v.errors.push_back("capacity: grid too large for the configured budget");
        continue;
      }
      try {
        *slot = estimate_capacity(*set, p, config.solver);
        if (!(*slot)->converged) v.errors.push_back("capacity: solver did not converge");
      } catch (const std::exception& e) {
        v.errors.push_back(std::string("capacity: ") + e.what());
      }
    }
  }
  if (config.dimension) v.dimension = detail::verdict_dimension(coarse, fine, v.errors);

  const auto suff_dirs = config.sufficient_directions.empty() ? default_directions(n, false)
                                                              : config.sufficient_directions;
  const auto wit_dirs = config.witness_directions.empty() ? default_directions(n, true)
                                                          : config.witness_directions;
  try {
    v.sufficient = sufficient_check(coarse, fine, suff_dirs, config.scan);
    v.checks.push_back({"sufficient", v.sufficient->pass, v.sufficient->note});
  } catch (const std::exception& e) {
    v.errors.push_back(std::string("sufficient check: ") + e.what());
  }
  try {
    v.witness = necessary_witness_check(coarse, fine, wit_dirs, config.scan);
    v.checks.push_back({"witness", v.witness->found, v.witness->note});
  } catch (const std::exception& e) {
    v.errors.push_back(std::string("witness check: ") + e.what());
  }

  if (m.persists) {
    v.label = Label::NotRemovableMeasure;
  } else if (v.sufficient && v.sufficient->pass) {
    v.label = Label::RemovableSufficient;
  } else if (v.witness && v.witness->found) {
    v.label = Label::WitnessFoundInconclusive;
  } else {
    v.label = Label::NoWitnessInconclusive;
  }
  return v;
}

/// Generates K on `geometry` and on its refinement, then classifies.
inline Verdict classify(const SetSpec& spec, const GridGeometry& geometry, double p,
                        const VerdictConfig& config = {}) {
  const GridSet coarse = generate(spec, geometry);
  const auto [fspec, fgeom] = refine(spec, geometry);
  const GridSet fine = generate(fspec, fgeom);
  return classify(coarse, fine, p, config);
}

/// Plain-text summary.
inline std::string summary(const Verdict& v) {
  std::string s = std::string("label: ") + to_string(v.label) + "\n";
  s += "p: " + std::to_string(v.p) + "\n";
  s += "measure: coarse " + std::to_string(v.measure.coarse) + ", fine " +
       std::to_string(v.measure.fine) + ", floor " + std::to_string(v.measure.floor) + "\n";
  if (v.capacity_coarse && v.capacity_fine)
    s += "capacity: " + std::to_string(v.capacity_coarse->value) + " (h " +
         std::to_string(v.capacity_coarse->h) + "), " + std::to_string(v.capacity_fine->value) +
         " (h " + std::to_string(v.capacity_fine->h) + ")\n";
  if (v.dimension) s += "box dimension: " + std::to_string(v.dimension->dimension) + "\n";
  for (const auto& c : v.checks)
    s += "check " + c.name + ": " + (c.passed ? "yes" : "no") + " (" + c.detail + ")\n";
  for (const auto& e : v.errors) s += "error: " + e + "\n";
  return s;
}

}  // namespace sobrem
