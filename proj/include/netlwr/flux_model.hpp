#pragma once

#include <utility>
#include <vector>

namespace netlwr {

/// Densities are normalized so that the jam density is 1.
using Density = double;
/// Vehicles per unit time.
using Flux = double;

/// Slack accepted around [0, 1] and [0, f_max] to absorb rounding in the caller.
inline constexpr double kRangeSlack = 1e-12;

enum class Branch { Free, Congested };

/// Fundamental diagram f on [0, 1]: concave, f(0) = f(1) = 0, unimodal with
/// maximizer rho_cr. Either the closed-form quadratic f(rho) = rho (1 - rho)
/// or a piecewise-linear interpolant of a concave sample table.
///
/// Immutable after construction.
class FluxModel {
 public:
  enum class Kind { Quadratic, Tabulated };
  using Sample = std::pair<Density, Flux>;

  static FluxModel quadratic();

  /// Samples must start at (0, 0), end at (1, 0), be strictly increasing in
  /// rho, concave, and strictly unimodal. `lipschitz_bound` must dominate
  /// every segment slope. Throws DomainError otherwise.
  static FluxModel tabulated(std::vector<Sample> samples, double lipschitz_bound);

  Kind kind() const noexcept { return kind_; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }

  Density rho_cr() const noexcept { return rho_cr_; }
  Flux f_max() const noexcept { return f_max_; }
  double lipschitz_bound() const noexcept { return lipschitz_; }

  Flux flux(Density rho) const;

  /// |f'(rho)|; at a table node the larger of the two one-sided slopes.
  double speed_bound(Density rho) const;

  /// Companion density on the other branch with the same flux.
  Density tau(Density rho) const;

  /// Maximal flux an incoming road can send.
  Flux demand(Density rho) const;

  /// Maximal flux an outgoing road can absorb.
  Flux supply(Density rho) const;

  /// Density on `branch` whose flux equals `gamma`. Throws InfeasibleFluxError
  /// when gamma > f_max.
  Density inverse_flux(Flux gamma, Branch branch) const;

  friend bool operator==(const FluxModel& a, const FluxModel& b) {
    return a.kind_ == b.kind_ && a.samples_ == b.samples_ && a.lipschitz_ == b.lipschitz_;
  }

 private:
  FluxModel() = default;

  Density checked_density(Density rho) const;
  Flux table_flux(Density rho) const;

  Kind kind_ = Kind::Quadratic;
  std::vector<Sample> samples_;
  Density rho_cr_ = 0.5;
  Flux f_max_ = 0.25;
  double lipschitz_ = 1.0;
};

}  // namespace netlwr
