#include <cmath>
#include <sstream>

#include "netlwr/errors.hpp"
#include "netlwr/trace.hpp"

namespace netlwr {

BoundaryTrace reconstruct(const FluxModel& model, std::span<const Density> rho0,
                          const JunctionFluxes& fluxes) {
  const std::size_t n = fluxes.q_in.size();
  const std::size_t m = fluxes.q_out.size();
  if (rho0.size() != n + m) {
    std::ostringstream os;
    os << "trace reconstruction got " << rho0.size() << " densities for " << n + m << " roads";
    throw DimensionError(os.str());
  }

  BoundaryTrace trace;
  trace.rho_bar.reserve(n + m);
  for (std::size_t l = 0; l < n + m; ++l) {
    const bool incoming = l < n;
    const Flux gamma = incoming ? fluxes.q_in[l] : fluxes.q_out[l - n];
    const Flux bound = incoming ? model.demand(rho0[l]) : model.supply(rho0[l]);
    if (gamma > bound + kRangeSlack) {
      std::ostringstream os;
      os.precision(17);
      os << "flux " << gamma << " on road " << l + 1 << " exceeds its "
         << (incoming ? "demand " : "supply ") << bound;
      throw InfeasibleFluxError(os.str());
    }
    if (std::abs(model.flux(rho0[l]) - gamma) <= kTraceFluxTol) {
      trace.rho_bar.push_back(rho0[l]);
    } else {
      trace.rho_bar.push_back(
          model.inverse_flux(gamma, incoming ? Branch::Congested : Branch::Free));
    }
  }
  return trace;
}

RiemannSolution solve_riemann(const FluxModel& model, const JunctionSpec& spec, SolverKind solver,
                              std::span<const Density> rho0, RecursionTrace* recursion) {
  RiemannSolution s;
  s.bounds = bounds_from_data(model, spec, rho0);
  s.fluxes = solve_junction(solver, spec, s.bounds, recursion);
  s.trace = reconstruct(model, rho0, s.fluxes);
  return s;
}

bool check_consistency(const FluxModel& model, const JunctionSpec& spec, SolverKind solver,
                       std::span<const Density> rho0, double tol) {
  const auto first = solve_riemann(model, spec, solver, rho0);
  const auto second = solve_riemann(model, spec, solver, first.trace.rho_bar);
  for (std::size_t l = 0; l < first.trace.rho_bar.size(); ++l) {
    if (std::abs(first.trace.rho_bar[l] - second.trace.rho_bar[l]) > tol) return false;
  }
  return true;
}

bool is_equilibrium(const FluxModel& model, const JunctionSpec& spec, SolverKind solver,
                    std::span<const Density> rho0, double tol) {
  const auto s = solve_riemann(model, spec, solver, rho0);
  for (std::size_t l = 0; l < rho0.size(); ++l) {
    if (std::abs(s.trace.rho_bar[l] - rho0[l]) > tol) return false;
  }
  return true;
}

}  // namespace netlwr
