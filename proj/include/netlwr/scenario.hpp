#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netlwr/flux_model.hpp"
#include "netlwr/godunov.hpp"
#include "netlwr/junction.hpp"

namespace netlwr {

/// Constant density on [from, to) in road-local coordinates (0 = left end).
struct InitialSegment {
  double from = 0.0;
  double to = 0.0;
  Density rho = 0.0;
  friend bool operator==(const InitialSegment&, const InitialSegment&) = default;
};

struct RoadDecl {
  std::string id;
  double length = 1.0;
  std::size_t cells = 0;
  /// Output coordinate of the left end. Defaults to -length for roads whose
  /// only junction end is the right one, 0 otherwise.
  std::optional<double> x0;
  std::vector<InitialSegment> initial;
  /// Dirichlet ghost values; default to the initial density at that end.
  std::optional<Density> left_ghost;
  std::optional<Density> right_ghost;

  double dx() const { return length / static_cast<double>(cells); }
  friend bool operator==(const RoadDecl&, const RoadDecl&) = default;
};

struct JunctionDecl {
  std::string id;
  std::vector<std::string> incoming;
  std::vector<std::string> outgoing;
  /// m x n distribution matrix, one row per outgoing road.
  std::vector<std::vector<double>> distribution;
  std::vector<double> priorities;
  friend bool operator==(const JunctionDecl&, const JunctionDecl&) = default;
};

struct Scenario {
  std::string name;
  FluxModel flux = FluxModel::quadratic();
  SolverKind solver = SolverKind::Prs;
  double final_time = 1.0;
  double cfl_safety = 1.0;
  std::vector<double> sample_times;
  std::string output_dir;
  std::vector<RoadDecl> roads;
  std::vector<JunctionDecl> junctions;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses a JSON scenario document (or a run manifest, whose "scenario"
/// member is used) and validates it. Throws ScenarioError with the JSON path
/// of the offending entity.
Scenario parse_scenario(std::string_view text);

/// Reads and parses `path`; errors name the path.
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical JSON form; parse_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const Scenario& scenario);

/// Semantic checks shared by the parser, the built-in cases and CLI overrides.
/// Throws ScenarioError, or UnsupportedJunctionError when the selected
/// solver cannot handle one of the junctions.
void validate_scenario(const Scenario& scenario);

/// "case1", "case2" or "case3": unit-length roads meeting at x = 0, quadratic
/// flux, 200 cells per road, T = 1.
Scenario builtin_scenario(std::string_view name);
std::vector<std::string> builtin_names();

/// Sets the cell count of every road from a target cell width.
void apply_dx(Scenario& scenario, double dx);

/// Exact cell averages of the piecewise-constant initial profile.
std::vector<Density> initial_cell_averages(const RoadDecl& road);

Network build_network(const Scenario& scenario);

RunParameters run_parameters(const Scenario& scenario);

Trajectory run_scenario(const Scenario& scenario);

}  // namespace netlwr
