#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "netlwr/errors.hpp"
#include "netlwr/godunov.hpp"

namespace netlwr {

namespace {

const JunctionAttachment* junction_end(const Attachment& a) {
  return std::get_if<JunctionAttachment>(&a);
}

double dx_min(std::span<const RoadGrid> roads) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& r : roads) d = std::min(d, r.dx);
  return d;
}

double state_speed(const FluxModel& model, std::span<const RoadGrid> roads) {
  double speed = 0.0;
  for (const auto& road : roads) {
    for (Density u : road.rho) speed = std::max(speed, model.speed_bound(u));
    for (const Attachment* end : {&road.left, &road.right}) {
      if (const auto* b = std::get_if<DirichletBoundary>(end)) {
        speed = std::max(speed, model.speed_bound(b->ghost));
      }
    }
  }
  return speed;
}

}  // namespace

double RoadGrid::mass() const {
  return dx * std::accumulate(rho.begin(), rho.end(), 0.0);
}

void validate_network(const Network& network) {
  const auto& roads = network.roads;
  for (std::size_t r = 0; r < roads.size(); ++r) {
    const auto& road = roads[r];
    if (road.cells() < 2) {
      throw PreconditionError("road " + road.id + " needs at least 2 cells");
    }
    if (!(road.dx > 0.0)) throw PreconditionError("road " + road.id + " has non-positive dx");
    for (Density u : road.rho) {
      if (!(u >= 0.0 && u <= 1.0)) {
        throw PreconditionError("road " + road.id + " has a density outside [0, 1]");
      }
    }
    for (const Attachment* end : {&road.left, &road.right}) {
      if (const auto* b = std::get_if<DirichletBoundary>(end)) {
        if (!(b->ghost >= 0.0 && b->ghost <= 1.0)) {
          throw PreconditionError("road " + road.id + " has a ghost density outside [0, 1]");
        }
        continue;
      }
      const auto& att = std::get<JunctionAttachment>(*end);
      if (att.junction >= network.junctions.size()) {
        throw PreconditionError("road " + road.id + " attaches to an unknown junction");
      }
      const auto& jn = network.junctions[att.junction];
      const bool is_right = end == &road.right;
      const bool incoming_slot = att.slot < jn.spec.n();
      if (att.slot >= jn.roads.size() || jn.roads[att.slot] != r || is_right != incoming_slot) {
        throw PreconditionError("road " + road.id + " is not attached consistently to junction " +
                                jn.id);
      }
    }
  }
  for (std::size_t k = 0; k < network.junctions.size(); ++k) {
    const auto& jn = network.junctions[k];
    if (jn.roads.size() != jn.spec.n() + jn.spec.m()) {
      throw PreconditionError("junction " + jn.id + " lists the wrong number of roads");
    }
    for (std::size_t slot = 0; slot < jn.roads.size(); ++slot) {
      const std::size_t r = jn.roads[slot];
      if (r >= roads.size()) throw PreconditionError("junction " + jn.id + " names a missing road");
      const Attachment& end = slot < jn.spec.n() ? roads[r].right : roads[r].left;
      const auto* att = junction_end(end);
      if (!att || att->junction != k || att->slot != slot) {
        throw PreconditionError("junction " + jn.id + " slot " + std::to_string(slot + 1) +
                                " is not mirrored by road " + roads[r].id);
      }
    }
  }
}

std::vector<Density> junction_data(const Network& network, std::size_t junction) {
  const auto& jn = network.junctions.at(junction);
  std::vector<Density> data;
  data.reserve(jn.roads.size());
  for (std::size_t slot = 0; slot < jn.roads.size(); ++slot) {
    const auto& road = network.roads[jn.roads[slot]];
    data.push_back(slot < jn.spec.n() ? road.rho.back() : road.rho.front());
  }
  return data;
}

Flux godunov_flux(const FluxModel& model, Density u, Density v) {
  return std::min(model.demand(u), model.supply(v));
}

double compute_dt(const FluxModel& model, std::span<const RoadGrid> roads, double cfl_safety) {
  if (roads.empty()) throw PreconditionError("cannot compute a time step for an empty network");
  double speed = state_speed(model, roads);
  if (speed == 0.0) speed = model.lipschitz_bound();
  return cfl_safety * 0.5 * dx_min(roads) / speed;
}

StepPlan plan_step(const Network& network, SolverKind solver) {
  if (network.roads.empty()) {
    throw PreconditionError("cannot step an empty network");
  }
  StepPlan plan;
  plan.dx_min = dx_min(network.roads);
  plan.max_speed = state_speed(network.model, network.roads);
  plan.junctions.reserve(network.junctions.size());
  for (std::size_t k = 0; k < network.junctions.size(); ++k) {
    const auto data = junction_data(network, k);
    auto sol = solve_riemann(network.model, network.junctions[k].spec, solver, data);
    // Waves leave the junction from its boundary traces, so they enter the bound too.
    for (Density rho : sol.trace.rho_bar) {
      plan.max_speed = std::max(plan.max_speed, network.model.speed_bound(rho));
    }
    plan.junctions.push_back(std::move(sol));
  }
  if (plan.max_speed == 0.0) plan.max_speed = network.model.lipschitz_bound();
  return plan;
}

TimeStepRecord apply_step(Network& network, const StepPlan& plan, double dt, double t_end) {
  const auto& model = network.model;
  TimeStepRecord record;
  record.t = t_end;
  record.dt = dt;
  record.junctions.reserve(plan.junctions.size());
  for (const auto& sol : plan.junctions) record.junctions.push_back(sol.fluxes);
  record.boundary.resize(network.roads.size());

  std::vector<Flux> faces;
  for (std::size_t r = 0; r < network.roads.size(); ++r) {
    auto& road = network.roads[r];
    const std::size_t cells = road.cells();
    faces.assign(cells + 1, 0.0);

    if (const auto* b = std::get_if<DirichletBoundary>(&road.left)) {
      faces[0] = godunov_flux(model, b->ghost, road.rho.front());
    } else {
      const auto& att = std::get<JunctionAttachment>(road.left);
      const auto& q = plan.junctions[att.junction].fluxes;
      faces[0] = q.q_out[att.slot - q.q_in.size()];
    }
    for (std::size_t k = 1; k < cells; ++k) {
      faces[k] = godunov_flux(model, road.rho[k - 1], road.rho[k]);
    }
    if (const auto* b = std::get_if<DirichletBoundary>(&road.right)) {
      faces[cells] = godunov_flux(model, road.rho.back(), b->ghost);
    } else {
      const auto& att = std::get<JunctionAttachment>(road.right);
      faces[cells] = plan.junctions[att.junction].fluxes.q_in[att.slot];
    }

    const double ratio = dt / road.dx;
    for (std::size_t k = 0; k < cells; ++k) {
      const double next = road.rho[k] - ratio * (faces[k + 1] - faces[k]);
      if (!(next >= -kRangeSlack && next <= 1.0 + kRangeSlack)) {
        std::ostringstream os;
        os.precision(17);
        os << "density " << next << " left [0, 1] in cell " << k + 1 << " of road " << road.id
           << " at t = " << t_end;
        throw NumericalError(os.str());
      }
      road.rho[k] = next;
    }
    record.boundary[r] = {faces[0], faces[cells]};
  }
  return record;
}

TimeStepRecord step(Network& network, SolverKind solver, double dt, double t_end) {
  const auto plan = plan_step(network, solver);
  const double limit = plan.stable_dt(1.0);
  if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os.precision(17);
    os << "time step " << dt << " violates the CFL bound " << limit;
    throw PreconditionError(os.str());
  }
  return apply_step(network, plan, dt, t_end);
}

Trajectory run(Network network, const RunParameters& params) {
  validate_network(network);
  if (!(params.final_time >= 0.0)) throw PreconditionError("final time must be non-negative");
  if (!(params.cfl_safety > 0.0 && params.cfl_safety <= 1.0)) {
    throw PreconditionError("CFL safety factor must lie in (0, 1]");
  }

  Trajectory tr;
  const std::size_t nroads = network.roads.size();
  tr.inflow.assign(nroads, 0.0);
  tr.outflow.assign(nroads, 0.0);
  for (const auto& road : network.roads) tr.initial_mass.push_back(road.mass());

  std::vector<double> pending = params.sample_times;
  std::sort(pending.begin(), pending.end());
  std::size_t next_sample = 0;
  auto take_samples = [&](double t, bool final) {
    while (next_sample < pending.size() &&
           (final || pending[next_sample] <= t + 1e-12 * std::max(1.0, t))) {
      StateSample s;
      s.t = t;
      for (const auto& road : network.roads) s.rho.push_back(road.rho);
      tr.samples.push_back(std::move(s));
      ++next_sample;
    }
  };

  double t = 0.0;
  take_samples(t, false);
  while (t < params.final_time) {
    const auto plan = plan_step(network, params.solver);
    double dt = plan.stable_dt(params.cfl_safety);
    double t_end = t + dt;
    // Land on T instead of leaving a rounding-sized final step.
    if (t_end >= params.final_time - 1e-12 * std::max(1.0, params.final_time)) {
      dt = params.final_time - t;
      t_end = params.final_time;
    }
    auto record = apply_step(network, plan, dt, t_end);
    for (std::size_t r = 0; r < nroads; ++r) {
      tr.inflow[r] += dt * record.boundary[r].left;
      tr.outflow[r] += dt * record.boundary[r].right;
    }
    tr.steps.push_back(std::move(record));
    t = t_end;
    take_samples(t, false);
  }
  take_samples(t, true);

  for (const auto& road : network.roads) tr.final_mass.push_back(road.mass());
  tr.final_state = std::move(network);
  return tr;
}

}  // namespace netlwr
