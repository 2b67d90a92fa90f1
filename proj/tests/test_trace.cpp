#include <doctest.h>

#include <random>

#include "netlwr/diagnostics.hpp"
#include "netlwr/errors.hpp"
#include "netlwr/trace.hpp"

using namespace netlwr;

namespace {
const FluxModel kModel = FluxModel::quadratic();
}

TEST_CASE("reconstruct picks the branch from the road side") {
  // Case II road 2 under PRS.
  const double c2[] = {0.2, 0.6, 0.3, 0.8};
  auto t = reconstruct(kModel, c2, {{0.16, 0.2}, {0.2, 0.16}, 0.0});
  CHECK(t.rho_bar[1] == doctest::Approx(0.7236067977499790).epsilon(1e-12));
  CHECK(t.rho_bar[0] == 0.2);
  CHECK(t.rho_bar[3] == 0.8);
  CHECK(t.rho_bar[2] == doctest::Approx(0.27639320225002106).epsilon(1e-12));

  // Case I road 1: congested root of rho (1 - rho) = 0.2125.
  const double c1[] = {0.6, 0.2, 0.85, 0.2};
  t = reconstruct(kModel, c1, {{0.2125, 0.16}, {0.1275, 0.245}, 0.0});
  CHECK(t.rho_bar[0] == doctest::Approx(0.6936491673103708).epsilon(1e-12));
  CHECK(kModel.flux(t.rho_bar[0]) == doctest::Approx(0.2125).epsilon(1e-12));
  CHECK(t.rho_bar[2] == 0.85);

  CHECK_THROWS_AS(reconstruct(kModel, c1, {{0.2125, 0.2}, {0.1275, 0.285}, 0.0}),
                  InfeasibleFluxError);
  CHECK_THROWS_AS(reconstruct(kModel, c2, {{0.1}, {0.05, 0.05}, 0.0}), DimensionError);
}

TEST_CASE("Case I traces under PRS and SPRS") {
  const JunctionSpec s({{0.6, 0.0}, {0.4, 1.0}}, {0.7, 0.3});
  const double c1[] = {0.6, 0.2, 0.85, 0.2};
  const auto prs = solve_riemann(kModel, s, SolverKind::Prs, c1);
  // Road 2 receives less than f(0.2): its trace jumps to the congested branch.
  CHECK(prs.trace.rho_bar[1] > 0.5);
  CHECK(kModel.flux(prs.trace.rho_bar[1]) == doctest::Approx(0.09107142857142857));
  CHECK(prs.trace.rho_bar[3] == doctest::Approx(0.2281019098));
  const auto sprs = solve_riemann(kModel, s, SolverKind::Sprs, c1);
  CHECK(sprs.trace.rho_bar[1] == 0.2);
  CHECK(check_consistency(kModel, s, SolverKind::Prs, c1));
  CHECK(is_equilibrium(kModel, s, SolverKind::Prs, prs.trace.rho_bar));
  CHECK_FALSE(is_equilibrium(kModel, s, SolverKind::Prs, c1));
}

TEST_CASE("consistency on random data") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10000; ++k) {
    const std::size_t n = 2 + k % 2, m = 2;
    const auto s = random_spec(n, m, k % 3 != 0, rng);
    std::vector<double> rho(n + m);
    for (auto& r : rho) r = u(rng);
    for (auto kind : {SolverKind::Prs, SolverKind::Sprs, SolverKind::MaxFlux}) {
      if (kind == SolverKind::MaxFlux && n > m) continue;
      CHECK(check_consistency(kModel, s, kind, rho));
      const auto sol = solve_riemann(kModel, s, kind, rho);
      CHECK(is_equilibrium(kModel, s, kind, sol.trace.rho_bar));
    }
  }
}

TEST_CASE("tabulated model traces") {
  const auto m = FluxModel::tabulated(
      {{0.0, 0.0}, {0.25, 0.2}, {0.4, 0.26}, {0.6, 0.24}, {1.0, 0.0}}, 0.8);
  const JunctionSpec s({{0.5, 0.6}, {0.5, 0.4}}, {0.7, 0.3});
  const double data[] = {0.2, 0.7, 0.3, 0.9};
  const auto sol = solve_riemann(m, s, SolverKind::Prs, data);
  for (std::size_t l = 0; l < 4; ++l) {
    const double q = l < 2 ? sol.fluxes.q_in[l] : sol.fluxes.q_out[l - 2];
    CHECK(std::abs(m.flux(sol.trace.rho_bar[l]) - q) < 1e-10);
  }
  CHECK(check_consistency(m, s, SolverKind::Prs, data));
}
