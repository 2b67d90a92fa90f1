#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "netlwr/flux_model.hpp"

namespace netlwr {

/// Junction with n incoming and m outgoing roads.
///
/// `a(j, i)` is the fraction of the flow leaving incoming road i that enters
/// outgoing road j (columns sum to one). `priority(i)` ranks the incoming
/// roads; the entries are positive and sum to one.
class JunctionSpec {
 public:
  /// `rows` holds the m x n matrix row by row. Throws SpecError naming the
  /// offending column or entry when the invariants do not hold.
  JunctionSpec(std::vector<std::vector<double>> rows, std::vector<double> priorities);

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return m_; }
  double a(std::size_t j, std::size_t i) const noexcept { return a_[j * n_ + i]; }
  double priority(std::size_t i) const noexcept { return p_[i]; }
  std::span<const double> priorities() const noexcept { return p_; }
  std::vector<std::vector<double>> rows() const;

  /// (A P)_j, the outgoing load per unit of h along the priority ray.
  double ray_load(std::size_t j) const noexcept { return ray_load_[j]; }

  friend bool operator==(const JunctionSpec&, const JunctionSpec&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<double> a_;
  std::vector<double> p_;
  std::vector<double> ray_load_;
};

/// Upper bounds gamma^max: demands of incoming roads, supplies of outgoing roads.
struct ConstraintBounds {
  std::vector<Flux> gamma_max_in;
  std::vector<Flux> gamma_max_out;
};

struct JunctionFluxes {
  std::vector<Flux> q_in;
  std::vector<Flux> q_out;
  /// Reach of the priority ray inside the feasible set for the data the fluxes came from.
  double hbar = 0.0;
};

enum class SolverKind { Prs, Sprs, MaxFlux };

std::string_view to_string(SolverKind kind);
/// Accepts "prs", "sprs", "maxflux" (case-insensitive). Throws ScenarioError otherwise.
SolverKind parse_solver_kind(std::string_view name);

/// One pass of the priority recursion, recorded for inspection.
struct RecursionStep {
  /// h_i per incoming road; nullopt for roads already fixed.
  std::vector<std::optional<double>> h_in;
  /// h_j per outgoing road; +inf when the constraint no longer depends on h.
  std::vector<double> h_out;
  double hbar = 0.0;
  bool supply_binding = false;
  std::vector<std::size_t> binding_out;
  /// Incoming roads whose flux was fixed in this step.
  std::vector<std::size_t> fixed;
};

using RecursionTrace = std::vector<RecursionStep>;

/// gamma_max_in_i = demand(rho0_i), gamma_max_out_j = supply(rho0_{n+j}).
ConstraintBounds bounds_from_data(const FluxModel& model, const JunctionSpec& spec,
                                  std::span<const Density> rho0);

/// sup { h >= 0 : h P in Omega }.
double hbar(const JunctionSpec& spec, const ConstraintBounds& bounds);

/// Priority Riemann solver: walk along h P, fixing roads as their demand
/// binds; stop at the first binding supply.
JunctionFluxes solve_prs(const JunctionSpec& spec, const ConstraintBounds& bounds,
                         RecursionTrace* trace = nullptr);

/// Softer priorities: a binding supply only fixes the roads feeding it.
JunctionFluxes solve_sprs(const JunctionSpec& spec, const ConstraintBounds& bounds,
                          RecursionTrace* trace = nullptr);

/// Maximizes the total through-flux over Omega by vertex enumeration; ties
/// go to the lexicographically largest (gamma_1, gamma_2, ...). Requires
/// n <= m, otherwise throws UnsupportedJunctionError.
JunctionFluxes solve_maxflux_baseline(const JunctionSpec& spec, const ConstraintBounds& bounds);

/// Dispatch on `kind`. `trace` is only filled by the priority solvers.
JunctionFluxes solve_junction(SolverKind kind, const JunctionSpec& spec,
                              const ConstraintBounds& bounds, RecursionTrace* trace = nullptr);

/// True iff `gamma` lies in Omega up to `slack` on each constraint.
bool in_feasible_set(const JunctionSpec& spec, const ConstraintBounds& bounds,
                     std::span<const Flux> gamma, double slack = 1e-12);

}  // namespace netlwr
