#pragma once

#include <span>
#include <vector>

#include "netlwr/flux_model.hpp"
#include "netlwr/junction.hpp"

namespace netlwr {

/// Tolerance for deciding that a datum already carries the junction flux.
inline constexpr double kTraceFluxTol = 1e-10;

/// Boundary densities at the junction: incoming roads first, then outgoing.
struct BoundaryTrace {
  std::vector<Density> rho_bar;
};

/// Incoming roads keep their datum when it already carries the flux,
/// otherwise take the congested preimage; outgoing roads likewise with the
/// free preimage. Throws InfeasibleFluxError when a flux exceeds the
/// demand/supply of its datum.
BoundaryTrace reconstruct(const FluxModel& model, std::span<const Density> rho0,
                          const JunctionFluxes& fluxes);

/// Full Riemann solve at a junction: bounds, fluxes, traces.
struct RiemannSolution {
  ConstraintBounds bounds;
  JunctionFluxes fluxes;
  BoundaryTrace trace;
};

RiemannSolution solve_riemann(const FluxModel& model, const JunctionSpec& spec, SolverKind solver,
                              std::span<const Density> rho0, RecursionTrace* recursion = nullptr);

/// RS(RS(rho0)) == RS(rho0) within `tol` on every trace density.
bool check_consistency(const FluxModel& model, const JunctionSpec& spec, SolverKind solver,
                       std::span<const Density> rho0, double tol = 1e-10);

/// RS(rho0) == rho0 within `tol`.
bool is_equilibrium(const FluxModel& model, const JunctionSpec& spec, SolverKind solver,
                    std::span<const Density> rho0, double tol = 1e-10);

}  // namespace netlwr
