#include <doctest.h>

#include <cmath>
#include <random>

#include "netlwr/errors.hpp"
#include "netlwr/flux_model.hpp"

using namespace netlwr;

namespace {

FluxModel triangle_table() {
  return FluxModel::tabulated({{0.0, 0.0}, {0.25, 0.2}, {0.4, 0.26}, {0.6, 0.24}, {1.0, 0.0}},
                              0.8);
}

}  // namespace

TEST_CASE("quadratic flux values") {
  const auto m = FluxModel::quadratic();
  CHECK(m.flux(0.5) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(m.flux(0.0) == 0.0);
  CHECK(m.flux(0.85) == doctest::Approx(0.1275).epsilon(1e-15));
  CHECK(m.rho_cr() == 0.5);
  CHECK(m.f_max() == 0.25);
  CHECK_THROWS_AS(m.flux(1.5), DomainError);
  CHECK_THROWS_AS(m.flux(-0.1), DomainError);
}

TEST_CASE("tau pairs the two branches") {
  const auto m = FluxModel::quadratic();
  CHECK(m.tau(0.2) == doctest::Approx(0.8));
  CHECK(m.tau(0.5) == doctest::Approx(0.5));
  CHECK(m.tau(0.85) == doctest::Approx(0.15));
  for (double rho = 0.0; rho <= 1.0; rho += 0.01) {
    CHECK(std::abs(m.tau(m.tau(rho)) - rho) < 1e-10);
  }
}

TEST_CASE("demand and supply") {
  const auto m = FluxModel::quadratic();
  CHECK(m.demand(0.2) == doctest::Approx(0.16));
  CHECK(m.demand(0.6) == 0.25);
  CHECK(m.demand(0.5) == 0.25);
  CHECK(m.supply(0.85) == doctest::Approx(0.1275));
  CHECK(m.supply(0.2) == 0.25);
  CHECK(m.supply(1.0) == 0.0);

  double prev_d = -1.0, prev_s = 1.0;
  for (int k = 0; k <= 1000; ++k) {
    const double rho = k / 1000.0;
    const double d = m.demand(rho), s = m.supply(rho);
    CHECK(d >= prev_d);
    CHECK(s <= prev_s);
    CHECK(std::max(d, s) == m.f_max());
    CHECK(std::min(d, s) == doctest::Approx(m.flux(rho)));
    prev_d = d;
    prev_s = s;
  }
}

TEST_CASE("inverse flux") {
  const auto m = FluxModel::quadratic();
  CHECK(m.inverse_flux(0.2, Branch::Congested) == doctest::Approx(0.7236067977499790));
  CHECK(m.inverse_flux(0.25, Branch::Free) == doctest::Approx(0.5));
  CHECK(m.inverse_flux(0.0, Branch::Free) == 0.0);
  CHECK_THROWS_AS(m.inverse_flux(0.3, Branch::Free), InfeasibleFluxError);

  for (int k = 0; k <= 2500; ++k) {
    const double g = k * 1e-4;
    for (auto b : {Branch::Free, Branch::Congested}) {
      const double rho = m.inverse_flux(g, b);
      CHECK(std::abs(m.flux(rho) - g) < 1e-10);
      CHECK((b == Branch::Free ? rho <= 0.5 : rho >= 0.5));
    }
  }
}

TEST_CASE("tabulated flux") {
  const auto m = triangle_table();
  CHECK(m.rho_cr() == doctest::Approx(0.4));
  CHECK(m.f_max() == doctest::Approx(0.26));
  CHECK(m.flux(0.125) == doctest::Approx(0.1));
  CHECK(m.flux(0.8) == doctest::Approx(0.12));
  CHECK(m.speed_bound(0.1) == doctest::Approx(0.8));
  CHECK(m.demand(0.9) == doctest::Approx(0.26));
  CHECK(m.supply(0.1) == doctest::Approx(0.26));

  // Bisection against a dense scan of the table.
  for (double g = 0.0; g <= 0.26; g += 0.013) {
    const double free = m.inverse_flux(g, Branch::Free);
    const double cong = m.inverse_flux(g, Branch::Congested);
    CHECK(std::abs(m.flux(free) - g) < 1e-10);
    CHECK(std::abs(m.flux(cong) - g) < 1e-10);
    CHECK(free <= m.rho_cr() + 1e-12);
    CHECK(cong >= m.rho_cr() - 1e-12);
    double scan = 0.0;
    for (int k = 0; k <= 400000; ++k) {
      const double rho = 0.4 * k / 400000.0;
      if (m.flux(rho) >= g) {
        scan = rho;
        break;
      }
    }
    CHECK(std::abs(free - scan) < 2e-6);
  }
  for (double rho = 0.0; rho <= 1.0; rho += 0.05) {
    CHECK(std::abs(m.tau(m.tau(rho)) - rho) < 1e-9);
  }
}

TEST_CASE("tabulated flux validation") {
  using S = std::vector<FluxModel::Sample>;
  CHECK_THROWS_AS(FluxModel::tabulated(S{{0.0, 0.1}, {0.5, 0.2}, {1.0, 0.0}}, 1.0), DomainError);
  CHECK_THROWS_AS(FluxModel::tabulated(S{{0.0, 0.0}, {0.5, 0.2}, {0.9, 0.0}}, 1.0), DomainError);
  // Convex kink.
  CHECK_THROWS_AS(
      FluxModel::tabulated(S{{0.0, 0.0}, {0.3, 0.05}, {0.5, 0.2}, {1.0, 0.0}}, 1.0), DomainError);
  // Lipschitz bound below the steepest slope.
  CHECK_THROWS_AS(FluxModel::tabulated(S{{0.0, 0.0}, {0.5, 0.25}, {1.0, 0.0}}, 0.4), DomainError);
  // Flat top.
  CHECK_THROWS_AS(
      FluxModel::tabulated(S{{0.0, 0.0}, {0.4, 0.2}, {0.6, 0.2}, {1.0, 0.0}}, 1.0), DomainError);
  CHECK_NOTHROW(FluxModel::tabulated(S{{0.0, 0.0}, {0.5, 0.25}, {1.0, 0.0}}, 0.5));
}

TEST_CASE("quadratic matches a fine table") {
  std::vector<FluxModel::Sample> s;
  for (int k = 0; k <= 2000; ++k) {
    const double rho = k / 2000.0;
    s.emplace_back(rho, rho * (1 - rho));
  }
  const auto t = FluxModel::tabulated(s, 1.0);
  const auto q = FluxModel::quadratic();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double rho = u(rng);
    CHECK(std::abs(t.flux(rho) - q.flux(rho)) < 1e-6);
    const double g = 0.25 * u(rng);
    CHECK(std::abs(t.inverse_flux(g, Branch::Congested) - q.inverse_flux(g, Branch::Congested)) <
          2e-3);
  }
}

TEST_CASE("quadratic inverse reproduces the flux bit for bit near the top") {
  const auto q = FluxModel::quadratic();
  std::mt19937_64 rng(12);
  // Holds while |rho - 0.5| <= 0.1; wave speeds are small there.
  std::uniform_real_distribution<double> u(0.24, 0.25);
  for (int k = 0; k < 10000; ++k) {
    const double g = u(rng);
    CHECK(q.flux(q.inverse_flux(g, Branch::Free)) == g);
    CHECK(q.flux(q.inverse_flux(g, Branch::Congested)) == g);
  }
}
