#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "netlwr/diagnostics.hpp"
#include "netlwr/errors.hpp"
#include "netlwr/junction.hpp"

using namespace netlwr;

namespace {

const FluxModel kModel = FluxModel::quadratic();

JunctionSpec case1() { return JunctionSpec({{0.6, 0.0}, {0.4, 1.0}}, {0.7, 0.3}); }
JunctionSpec case2() { return JunctionSpec({{0.5, 0.6}, {0.5, 0.4}}, {0.7, 0.3}); }
JunctionSpec case3() {
  return JunctionSpec({{0.5, 0.6, 0.2}, {0.5, 0.4, 0.8}}, {0.5, 0.3, 0.2});
}

bool feasible(const JunctionSpec& s, const ConstraintBounds& b, const std::vector<double>& g,
              double slack) {
  for (std::size_t i = 0; i < s.n(); ++i) {
    if (g[i] < -slack || g[i] > b.gamma_max_in[i] + slack) return false;
  }
  for (std::size_t j = 0; j < s.m(); ++j) {
    double load = 0.0;
    for (std::size_t i = 0; i < s.n(); ++i) load += s.a(j, i) * g[i];
    if (load > b.gamma_max_out[j] + slack) return false;
  }
  return true;
}

// Independent construction of the priority walk: move the unfixed coordinates
// along P, locating each stop by bisection on feasibility, then fix the roads
// whose constraints became tight.
std::vector<double> walk_oracle(const JunctionSpec& s, const ConstraintBounds& b, bool soft) {
  const std::size_t n = s.n(), m = s.m();
  std::vector<double> q(n, 0.0);
  std::vector<bool> fixed(n, false);
  for (std::size_t round = 0; round <= n; ++round) {
    if (std::all_of(fixed.begin(), fixed.end(), [](bool f) { return f; })) break;
    auto at = [&](double t) {
      auto g = q;
      for (std::size_t i = 0; i < n; ++i) {
        if (!fixed[i]) g[i] += t * s.priority(i);
      }
      return g;
    };
    double lo = 0.0, hi = 1e3;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible(s, b, at(mid), 0.0) ? lo : hi) = mid;
    }
    q = at(lo);
    const double tight = 1e-9;
    std::vector<std::size_t> supplies;
    for (std::size_t j = 0; j < m; ++j) {
      double load = 0.0;
      for (std::size_t i = 0; i < n; ++i) load += s.a(j, i) * q[i];
      bool depends = false;
      for (std::size_t i = 0; i < n; ++i) depends |= !fixed[i] && s.a(j, i) > 0.0;
      if (depends && load >= b.gamma_max_out[j] - tight) supplies.push_back(j);
    }
    if (!supplies.empty()) {
      if (!soft) break;
      for (auto j : supplies) {
        for (std::size_t i = 0; i < n; ++i) {
          if (s.a(j, i) > 0.0) fixed[i] = true;
        }
      }
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!fixed[i] && q[i] >= b.gamma_max_in[i] - tight) fixed[i] = true;
    }
  }
  return q;
}

// Grid search for the max-flux point: largest sum, ties to the larger gamma_1.
std::vector<double> grid_maxflux(const JunctionSpec& s, const ConstraintBounds& b, double h) {
  std::vector<double> best{0.0, 0.0};
  double best_sum = -1.0;
  for (double g1 = 0.0; g1 <= b.gamma_max_in[0] + 1e-15; g1 += h) {
    for (double g2 = 0.0; g2 <= b.gamma_max_in[1] + 1e-15; g2 += h) {
      if (!feasible(s, b, {g1, g2}, 1e-15)) continue;
      if (g1 + g2 > best_sum + 1e-15 || (std::abs(g1 + g2 - best_sum) <= 1e-15 && g1 > best[0])) {
        best = {g1, g2};
        best_sum = g1 + g2;
      }
    }
  }
  return best;
}

ConstraintBounds random_bounds(const JunctionSpec& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 0.25);
  ConstraintBounds b;
  for (std::size_t i = 0; i < s.n(); ++i) b.gamma_max_in.push_back(u(rng));
  for (std::size_t j = 0; j < s.m(); ++j) b.gamma_max_out.push_back(u(rng));
  return b;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("junction spec validation names the offender") {
  try {
    JunctionSpec({{0.6, 0.0}, {0.3, 1.0}}, {0.7, 0.3});
    FAIL("expected SpecError");
  } catch (const SpecError& e) {
    CHECK(std::string(e.what()).find("column 1") != std::string::npos);
  }
  CHECK_THROWS_AS(JunctionSpec({{1.2, 0.0}, {-0.2, 1.0}}, {0.7, 0.3}), SpecError);
  CHECK_THROWS_AS(JunctionSpec({{0.6, 0.0}, {0.4, 1.0}}, {0.7, 0.2}), SpecError);
  CHECK_THROWS_AS(JunctionSpec({{0.6, 0.0}, {0.4, 1.0}}, {1.0, 0.0}), SpecError);
  CHECK_THROWS_AS(JunctionSpec({{0.6, 0.0}, {0.4, 1.0}}, {1.0}), SpecError);
  CHECK_THROWS_AS(JunctionSpec({{0.6}, {0.4, 1.0}}, {0.7, 0.3}), SpecError);
}

TEST_CASE("bounds from data") {
  const double c1[] = {0.6, 0.2, 0.85, 0.2};
  auto b = bounds_from_data(kModel, case1(), c1);
  CHECK(b.gamma_max_in[0] == doctest::Approx(0.25));
  CHECK(b.gamma_max_in[1] == doctest::Approx(0.16));
  CHECK(b.gamma_max_out[0] == doctest::Approx(0.1275));
  CHECK(b.gamma_max_out[1] == doctest::Approx(0.25));

  const double zero[] = {0.0, 0.0, 0.0, 0.0};
  b = bounds_from_data(kModel, case1(), zero);
  CHECK(b.gamma_max_in == std::vector<double>{0.0, 0.0});
  CHECK(b.gamma_max_out == std::vector<double>{0.25, 0.25});

  const double c2[] = {0.2, 0.6, 0.3, 0.8};
  b = bounds_from_data(kModel, case2(), c2);
  CHECK(b.gamma_max_in[0] == doctest::Approx(0.16));
  CHECK(b.gamma_max_in[1] == doctest::Approx(0.25));
  CHECK(b.gamma_max_out[0] == doctest::Approx(0.25));
  CHECK(b.gamma_max_out[1] == doctest::Approx(0.16));

  const double short_data[] = {0.1, 0.2, 0.3};
  CHECK_THROWS_AS(bounds_from_data(kModel, case1(), short_data), DimensionError);
}

TEST_CASE("hbar") {
  const double c1[] = {0.6, 0.2, 0.85, 0.2};
  const auto b = bounds_from_data(kModel, case1(), c1);
  CHECK(hbar(case1(), b) == doctest::Approx(0.1275 / 0.42).epsilon(1e-14));
  CHECK(hbar(case1(), {{0.0, 0.0}, {0.25, 0.25}}) == 0.0);

  // Bisection on the ray against random bounds.
  std::mt19937_64 rng(11);
  for (int k = 0; k < 2000; ++k) {
    const auto s = random_spec(2, 3, false, rng);
    const auto bb = random_bounds(s, rng);
    double lo = 0.0, hi = 1e3;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const std::vector<double> g{mid * s.priority(0), mid * s.priority(1)};
      (feasible(s, bb, g, 0.0) ? lo : hi) = mid;
    }
    CHECK(hbar(s, bb) == doctest::Approx(lo).epsilon(1e-12));
  }
}

TEST_CASE("PRS on the published cases") {
  const double c1[] = {0.6, 0.2, 0.85, 0.2};
  RecursionTrace tr;
  auto q = solve_prs(case1(), bounds_from_data(kModel, case1(), c1), &tr);
  CHECK(q.q_in[0] == doctest::Approx(0.2125).epsilon(1e-13));
  CHECK(q.q_in[1] == doctest::Approx(0.3 * 0.1275 / 0.42).epsilon(1e-13));
  CHECK(q.q_out[0] == doctest::Approx(0.1275).epsilon(1e-13));
  CHECK(q.q_out[1] == doctest::Approx(0.17607142857142857).epsilon(1e-13));
  REQUIRE(tr.size() == 1);
  CHECK(tr[0].supply_binding);
  CHECK(tr[0].binding_out == std::vector<std::size_t>{0});
  CHECK(tr[0].hbar == doctest::Approx(0.30357142857142855));

  const double c2[] = {0.2, 0.6, 0.3, 0.8};
  tr.clear();
  q = solve_prs(case2(), bounds_from_data(kModel, case2(), c2), &tr);
  CHECK(q.q_in[0] == doctest::Approx(0.16).epsilon(1e-13));
  CHECK(q.q_in[1] == doctest::Approx(0.2).epsilon(1e-13));
  CHECK(q.q_out[0] == doctest::Approx(0.2).epsilon(1e-13));
  CHECK(q.q_out[1] == doctest::Approx(0.16).epsilon(1e-13));
  REQUIRE(tr.size() == 2);
  CHECK(tr[0].fixed == std::vector<std::size_t>{0});
  CHECK(tr[1].hbar == doctest::Approx(2.0 / 3.0));
  CHECK(tr[1].binding_out == std::vector<std::size_t>{1});

  const double c3[] = {0.2, 0.6, 0.3, 0.8, 0.2};
  tr.clear();
  q = solve_prs(case3(), bounds_from_data(kModel, case3(), c3), &tr);
  CHECK(q.q_in[0] == doctest::Approx(0.16).epsilon(1e-13));
  CHECK(q.q_in[1] == doctest::Approx(0.3 * 0.08 / 0.22).epsilon(1e-13));
  CHECK(q.q_in[2] == doctest::Approx(0.2 * 0.08 / 0.22).epsilon(1e-13));
  CHECK(q.q_out[0] == doctest::Approx(0.16).epsilon(1e-13));
  CHECK(q.q_out[1] == doctest::Approx(0.18181818181818182).epsilon(1e-13));
  REQUIRE(tr.size() == 2);
  CHECK(tr[1].hbar == doctest::Approx(0.08 / 0.22));
}

TEST_CASE("SPRS on Case I") {
  const double c1[] = {0.6, 0.2, 0.85, 0.2};
  const auto b = bounds_from_data(kModel, case1(), c1);
  const auto q = solve_sprs(case1(), b);
  CHECK(q.q_in[0] == doctest::Approx(0.2125).epsilon(1e-13));
  CHECK(q.q_in[1] == doctest::Approx(0.16).epsilon(1e-13));
  CHECK(q.q_out[0] == doctest::Approx(0.1275).epsilon(1e-13));
  CHECK(q.q_out[1] == doctest::Approx(0.245).epsilon(1e-13));
  // The flux through the junction is higher than under PRS.
  CHECK(sum(q.q_in) > sum(solve_prs(case1(), b).q_in));

  const auto z = solve_sprs(case1(), {{0.0, 0.0}, {0.25, 0.25}});
  CHECK(z.q_in == std::vector<double>{0.0, 0.0});
  CHECK(z.q_out == std::vector<double>{0.0, 0.0});
}

TEST_CASE("max-flux baseline") {
  const double c2[] = {0.2, 0.6, 0.3, 0.8};
  const auto b = bounds_from_data(kModel, case2(), c2);
  const auto q = solve_maxflux_baseline(case2(), b);
  CHECK(q.q_in[0] == doctest::Approx(0.12).epsilon(1e-13));
  CHECK(q.q_in[1] == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(q.q_out[0] == doctest::Approx(0.21).epsilon(1e-13));
  CHECK(q.q_out[1] == doctest::Approx(0.16).epsilon(1e-13));
  const auto g = grid_maxflux(case2(), b, 1e-3);
  CHECK(std::abs(g[0] - q.q_in[0]) < 2e-3);
  CHECK(std::abs(g[1] - q.q_in[1]) < 2e-3);

  const auto z = solve_maxflux_baseline(case2(), {{0.0, 0.0}, {0.25, 0.16}});
  CHECK(z.q_in == std::vector<double>{0.0, 0.0});

  // Supplies that never bind: every road sends its demand.
  const auto free = solve_maxflux_baseline(case2(), {{0.16, 0.25}, {0.5, 0.5}});
  CHECK(free.q_in[0] == doctest::Approx(0.16));
  CHECK(free.q_in[1] == doctest::Approx(0.25));

  CHECK_THROWS_AS(solve_maxflux_baseline(case3(), {{0.1, 0.1, 0.1}, {0.25, 0.25}}),
                  UnsupportedJunctionError);
}

TEST_CASE("max-flux baseline against grid search") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 200; ++k) {
    const auto s = random_spec(2, 2, k % 2 == 0, rng);
    const auto b = random_bounds(s, rng);
    const auto q = solve_maxflux_baseline(s, b);
    const auto g = grid_maxflux(s, b, 1e-3);
    CHECK(feasible(s, b, q.q_in, 1e-12));
    // The grid optimum cannot beat the vertex optimum and lies within a cell of it.
    CHECK(sum(g) <= sum(q.q_in) + 1e-12);
    CHECK(sum(q.q_in) - sum(g) < 3e-3);
  }
}

TEST_CASE("priority solvers match the bisection walk") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 3000; ++k) {
    const std::size_t n = 1 + k % 3, m = 1 + (k / 3) % 3;
    const auto s = random_spec(n, m, false, rng);
    const auto b = random_bounds(s, rng);
    const auto prs = solve_prs(s, b);
    const auto sprs = solve_sprs(s, b);
    const auto wp = walk_oracle(s, b, false);
    const auto ws = walk_oracle(s, b, true);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(prs.q_in[i] - wp[i]) < 1e-8);
      CHECK(std::abs(sprs.q_in[i] - ws[i]) < 1e-8);
    }
  }
}

TEST_CASE("solver invariants on random specs") {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 10000; ++k) {
    const std::size_t n = 1 + k % 3, m = 1 + (k / 3) % 3;
    const auto s = random_spec(n, m, false, rng);
    const auto b = random_bounds(s, rng);
    for (auto kind : {SolverKind::Prs, SolverKind::Sprs, SolverKind::MaxFlux}) {
      if (kind == SolverKind::MaxFlux && n > m) continue;
      RecursionTrace tr;
      const auto q = solve_junction(kind, s, b, &tr);
      CHECK(in_feasible_set(s, b, q.q_in, 1e-12));
      CHECK(std::abs(sum(q.q_in) - sum(q.q_out)) <= 1e-12);
      CHECK(q.hbar == hbar(s, b));
      if (kind != SolverKind::MaxFlux) {
        REQUIRE(!tr.empty());
        CHECK(tr.front().hbar == hbar(s, b));
        for (std::size_t t = 1; t < tr.size(); ++t) CHECK(tr[t].hbar >= tr[t - 1].hbar);
        CHECK(tr.size() <= n);
      }
    }
  }
}

TEST_CASE("PRS and SPRS coincide when every a_ji is positive") {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 10000; ++k) {
    const std::size_t n = 1 + k % 3, m = 2 + (k / 3) % 2;
    const auto s = random_spec(n, m, true, rng);
    const auto b = random_bounds(s, rng);
    const auto p = solve_prs(s, b);
    const auto q = solve_sprs(s, b);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(p.q_in[i] - q.q_in[i]) <= 1e-14);
  }
}

TEST_CASE("degenerate bounds fix zero-demand roads first") {
  const JunctionSpec s({{0.5, 0.5}, {0.5, 0.5}}, {0.5, 0.5});
  RecursionTrace tr;
  const auto q = solve_prs(s, {{0.0, 0.2}, {0.25, 0.25}}, &tr);
  CHECK(q.q_in[0] == 0.0);
  CHECK(q.q_in[1] == doctest::Approx(0.2));
  CHECK(tr[0].hbar == 0.0);
  CHECK(tr[0].fixed == std::vector<std::size_t>{0});
}

TEST_CASE("SPRS with a road feeding no binding supply keeps going") {
  // Road 2 feeds only road 4; the road-3 supply binds first.
  const JunctionSpec s({{1.0, 0.0}, {0.0, 1.0}}, {0.5, 0.5});
  const ConstraintBounds b{{0.25, 0.25}, {0.05, 0.25}};
  const auto p = solve_prs(s, b);
  const auto q = solve_sprs(s, b);
  CHECK(p.q_in[1] == doctest::Approx(0.05));
  CHECK(q.q_in[0] == doctest::Approx(0.05));
  CHECK(q.q_in[1] == doctest::Approx(0.25));
}

TEST_CASE("parse solver kind") {
  CHECK(parse_solver_kind("PRS") == SolverKind::Prs);
  CHECK(parse_solver_kind("sprs") == SolverKind::Sprs);
  CHECK(parse_solver_kind("MaxFlux") == SolverKind::MaxFlux);
  CHECK_THROWS_AS(parse_solver_kind("greedy"), ScenarioError);
  CHECK(to_string(SolverKind::Sprs) == "sprs");
}

TEST_CASE("solver runtime") {
  const double c1[] = {0.6, 0.2, 0.85, 0.2};
  const auto b = bounds_from_data(kModel, case1(), c1);
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < 1000; ++k) (void)solve_prs(case1(), b);
  const auto us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0);
  CHECK(us.count() / 1000.0 < 1000.0);
}

TEST_CASE("binding constraints are met exactly") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 5000; ++k) {
    const std::size_t n = 1 + k % 3, m = 1 + (k / 3) % 3;
    const auto spec = random_spec(n, m, false, rng);
    std::vector<Density> rho(n + m);
    for (auto& v : rho) v = u(rng);
    const auto b = bounds_from_data(kModel, spec, rho);
    for (auto kind : {SolverKind::Prs, SolverKind::Sprs}) {
      RecursionTrace tr;
      const auto q = kind == SolverKind::Prs ? solve_prs(spec, b, &tr) : solve_sprs(spec, b, &tr);
      for (const auto& st : tr) {
        for (auto j : st.binding_out) CHECK(q.q_out[j] == b.gamma_max_out[j]);
      }
      for (std::size_t i = 0; i < n; ++i) CHECK(q.q_in[i] <= b.gamma_max_in[i]);
    }
  }
}

TEST_CASE("SPRS against PRS on zero-pattern specs (reported, not asserted)") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int runs = 0, componentwise = 0, total = 0;
  for (int k = 0; k < 5000; ++k) {
    const std::size_t n = 2 + k % 2, m = 2 + (k / 2) % 2;
    const auto spec = random_spec(n, m, false, rng);
    std::vector<Density> rho(n + m);
    for (auto& v : rho) v = u(rng);
    const auto b = bounds_from_data(kModel, spec, rho);
    const auto p = solve_prs(spec, b);
    const auto s = solve_sprs(spec, b);
    ++runs;
    bool dom = true;
    for (std::size_t i = 0; i < n; ++i) dom = dom && s.q_in[i] >= p.q_in[i] - 1e-12;
    if (dom) ++componentwise;
    if (sum(s.q_in) >= sum(p.q_in) - 1e-12) ++total;
  }
  MESSAGE("SPRS >= PRS componentwise in " << componentwise << "/" << runs << ", in Gamma in "
                                          << total << "/" << runs);
  CHECK(runs == 5000);
}
