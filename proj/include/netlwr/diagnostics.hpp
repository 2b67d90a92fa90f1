#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "netlwr/flux_model.hpp"
#include "netlwr/junction.hpp"
#include "netlwr/trace.hpp"

namespace netlwr {

/// Total flux through the junction, the sum of the incoming fluxes.
Flux gamma_functional(const JunctionFluxes& fluxes);

/// Sum over roads of |f(right) - f(left)| across every jump of a piecewise
/// constant profile (states listed left to right on each road).
Flux tv_flux(const FluxModel& model, const std::vector<std::vector<Density>>& roads);

/// Good data: incoming in [rho_cr, 1], outgoing in [0, rho_cr].
bool is_good_datum(const FluxModel& model, bool incoming, Density rho);

/// True iff the solver output (fluxes and traces) is unchanged within 1e-12
/// when only good data change. Throws PreconditionError if a changed road
/// holds a bad datum before or after.
bool check_p1(const FluxModel& model, const JunctionSpec& spec, SolverKind solver,
              const std::vector<Density>& base, const std::vector<Density>& perturbed);

/// Whether the wave between `rho` (new state) and `rho0` (datum at J) moves
/// toward the junction: (rho, rho0) on incoming roads, (rho0, rho) on outgoing ones.
bool wave_reaches_junction(const FluxModel& model, bool incoming, Density rho0, Density rho);

struct InteractionExperiment {
  JunctionSpec spec;
  std::vector<Density> equilibrium;
  std::size_t road = 0;
  Density rho = 0.0;
};

struct InteractionResult {
  double gamma_before = 0.0, gamma_after = 0.0;
  double hbar_before = 0.0, hbar_after = 0.0;
  double tv_before = 0.0, tv_after = 0.0;
  std::vector<Flux> flux_before, flux_after;
  std::vector<Density> trace_after;

  double d_gamma() const { return gamma_after - gamma_before; }
  double d_hbar() const { return hbar_after - hbar_before; }
  double d_tv() const { return tv_after - tv_before; }
  /// |f(rho_l0) - f(rho_l)|, the strength of the incoming wave.
  double d_flux() const { return tv_before; }
};

/// Re-solves the junction with the perturbed datum. TV before is the strength
/// of the incoming wave; TV after sums |f(trace) - f(datum)| over all roads.
/// Throws PreconditionError if the base is not an equilibrium within 1e-10
/// or the wave does not reach the junction.
InteractionResult run_interaction(const FluxModel& model, SolverKind solver,
                                  const InteractionExperiment& exp);

enum class Sign { Negative, Zero, Positive, Unspecified };

std::string_view to_string(Sign s);

/// Interaction fixture reproducing one branch of the 2x2 case analysis.
struct InteractionFixture {
  std::string name;
  InteractionExperiment experiment;
  Sign d_gamma = Sign::Unspecified;
  Sign d_hbar = Sign::Unspecified;
  /// Set when the case states Delta TV_f = 0.
  bool tv_zero = false;
};

/// A1+/-, A2+/-, A3+/-, B1+/-, B2+/-, B3+/-, B4+, C1+/-, C3+/-, C4+ and
/// mirrored copies obtained by relabelling roads. Quadratic flux.
std::vector<InteractionFixture> interaction_fixtures();

/// Swaps incoming roads i1 <-> i2 (or outgoing j1 <-> j2, given as road
/// indices >= n) in the spec, the data and the perturbed road.
InteractionExperiment permute_roads(const InteractionExperiment& exp, std::size_t l1,
                                    std::size_t l2);

/// Within tolerance `tol`, does `value` have sign `s`?
bool sign_matches(Sign s, double value, double tol);

struct SweepConfig {
  SolverKind solver = SolverKind::Prs;
  std::size_t n = 2;
  std::size_t m = 2;
  std::size_t experiments = 10000;
  std::uint64_t seed = 1;
  /// Draw 0 < a_ji < 1 strictly (the regime where the properties are claimed).
  bool strict_interior = true;
  /// Deltas at or below this are treated as zero.
  double zero_tol = 1e-12;
};

struct SweepRecord {
  std::size_t road = 0;
  bool decreasing = false;
  double d_flux = 0.0, d_gamma = 0.0, d_hbar = 0.0, d_tv = 0.0;
};

struct SweepReport {
  SweepConfig config;
  std::size_t experiments = 0;
  std::size_t decreasing = 0;
  std::size_t consistency_failures = 0;
  /// Decreasing waves with Delta hbar > zero_tol.
  std::size_t p3_monotonicity_violations = 0;
  /// Ratios that could not be bounded by any finite C.
  std::size_t p2_tv_violations = 0;
  std::size_t p2_hbar_violations = 0;
  std::size_t p3_gamma_violations = 0;
  /// Empirical constants, max(1, largest observed ratio).
  double c_tv = 1.0;
  double c_hbar = 1.0;
  double c_gamma = 1.0;
  double max_d_hbar_decreasing = 0.0;
  std::vector<SweepRecord> records;

  bool passed() const;
  std::string summary() const;
  std::string csv() const;
};

/// Random equilibrium-plus-admissible-wave experiments. Equilibria are the
/// traces of random data (consistency makes them fixed points).
SweepReport check_p2_p3(const FluxModel& model, const SweepConfig& config);

struct P1SweepReport {
  std::size_t experiments = 0;
  std::size_t failures = 0;
};

/// Random good-data perturbations on random n x m junctions.
P1SweepReport p1_sweep(const FluxModel& model, SolverKind solver, std::size_t n, std::size_t m,
                       std::size_t experiments, std::uint64_t seed);

/// Random column-stochastic spec with random priorities. With `interior`
/// every entry lies strictly inside (0, 1) (needs m >= 2).
JunctionSpec random_spec(std::size_t n, std::size_t m, bool interior, std::mt19937_64& rng);

}  // namespace netlwr
