#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "netlwr/flux_model.hpp"
#include "netlwr/junction.hpp"
#include "netlwr/trace.hpp"

namespace netlwr {

/// Road end closed by a ghost cell holding a fixed density.
struct DirichletBoundary {
  Density ghost = 0.0;
  friend bool operator==(const DirichletBoundary&, const DirichletBoundary&) = default;
};

/// Road end attached to `slot` of junction `junction` (slots list incoming
/// roads first, then outgoing ones).
struct JunctionAttachment {
  std::size_t junction = 0;
  std::size_t slot = 0;
  friend bool operator==(const JunctionAttachment&, const JunctionAttachment&) = default;
};

using Attachment = std::variant<DirichletBoundary, JunctionAttachment>;

/// One road discretized into equal cells numbered left to right.
struct RoadGrid {
  std::string id;
  double dx = 0.0;
  /// Coordinate of the left end, used only for output.
  double x0 = 0.0;
  std::vector<Density> rho;
  Attachment left;
  Attachment right;

  std::size_t cells() const noexcept { return rho.size(); }
  double mass() const;
  double cell_center(std::size_t k) const { return x0 + (static_cast<double>(k) + 0.5) * dx; }
};

struct NetworkJunction {
  std::string id;
  JunctionSpec spec;
  /// Road indices: n incoming (attached by their right end) then m outgoing (left end).
  std::vector<std::size_t> roads;
};

struct Network {
  FluxModel model = FluxModel::quadratic();
  std::vector<RoadGrid> roads;
  std::vector<NetworkJunction> junctions;
};

/// Throws PreconditionError if roads and junctions disagree on attachments.
void validate_network(const Network& network);

/// Cell averages seen by a junction: last cell of incoming roads, first cell of outgoing ones.
std::vector<Density> junction_data(const Network& network, std::size_t junction);

struct RoadBoundaryFlux {
  Flux left = 0.0;
  Flux right = 0.0;
};

struct TimeStepRecord {
  double t = 0.0;  ///< time at the end of the step
  double dt = 0.0;
  std::vector<JunctionFluxes> junctions;
  std::vector<RoadBoundaryFlux> boundary;
};

/// Exact Riemann flux between cell averages u | v: min(demand(u), supply(v)).
Flux godunov_flux(const FluxModel& model, Density u, Density v);

/// safety * dx_min / (2 max |f'|) over every cell and Dirichlet ghost. Falls back
/// to the model's Lipschitz bound when the state has zero characteristic speed.
double compute_dt(const FluxModel& model, std::span<const RoadGrid> roads, double cfl_safety);

/// Junction solves for the current state plus the resulting wave-speed bound.
struct StepPlan {
  std::vector<RiemannSolution> junctions;
  /// max |f'| over cells, ghosts and junction traces.
  double max_speed = 0.0;
  double dx_min = 0.0;

  double stable_dt(double cfl_safety) const { return cfl_safety * 0.5 * dx_min / max_speed; }
};

StepPlan plan_step(const Network& network, SolverKind solver);

/// Advances by `dt` using a plan computed on the current state. `t_end` is
/// stored in the record. Throws NumericalError if a density leaves [0, 1].
TimeStepRecord apply_step(Network& network, const StepPlan& plan, double dt, double t_end);

/// plan_step + CFL check + apply_step. Throws PreconditionError when dt
/// exceeds the stable step for the current state.
TimeStepRecord step(Network& network, SolverKind solver, double dt, double t_end);

struct RunParameters {
  SolverKind solver = SolverKind::Prs;
  double final_time = 1.0;
  double cfl_safety = 1.0;
  std::vector<double> sample_times;
};

struct StateSample {
  double t = 0.0;
  std::vector<std::vector<Density>> rho;  ///< per road
};

struct Trajectory {
  std::vector<StateSample> samples;
  std::vector<TimeStepRecord> steps;
  Network final_state;
  std::vector<double> initial_mass;
  std::vector<double> final_mass;
  /// Time integrals of the flux through each road's left / right end.
  std::vector<double> inflow;
  std::vector<double> outflow;
};

/// Integrates from t = 0 to `final_time`, shortening the last step to land
/// on it. A sample time is served by the first step ending at or after it
/// (1e-12 relative slack for the accumulated time).
Trajectory run(Network network, const RunParameters& params);

}  // namespace netlwr
