#include "netlwr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <sstream>

#include "netlwr/errors.hpp"

namespace netlwr {

Flux gamma_functional(const JunctionFluxes& fluxes) {
  return std::accumulate(fluxes.q_in.begin(), fluxes.q_in.end(), 0.0);
}

Flux tv_flux(const FluxModel& model, const std::vector<std::vector<Density>>& roads) {
  Flux tv = 0.0;
  for (const auto& states : roads) {
    for (std::size_t k = 1; k < states.size(); ++k) {
      tv += std::abs(model.flux(states[k]) - model.flux(states[k - 1]));
    }
  }
  return tv;
}

bool is_good_datum(const FluxModel& model, bool incoming, Density rho) {
  return incoming ? rho >= model.rho_cr() : rho <= model.rho_cr();
}

bool check_p1(const FluxModel& model, const JunctionSpec& spec, SolverKind solver,
              const std::vector<Density>& base, const std::vector<Density>& perturbed) {
  if (base.size() != spec.n() + spec.m() || perturbed.size() != base.size()) {
    throw DimensionError("check_p1 needs n + m densities in both data sets");
  }
  for (std::size_t l = 0; l < base.size(); ++l) {
    if (base[l] == perturbed[l]) continue;
    const bool incoming = l < spec.n();
    if (!is_good_datum(model, incoming, base[l]) || !is_good_datum(model, incoming, perturbed[l])) {
      throw PreconditionError("perturbation changes road " + std::to_string(l + 1) +
                              ", which holds a bad datum");
    }
  }
  const auto a = solve_riemann(model, spec, solver, base);
  const auto b = solve_riemann(model, spec, solver, perturbed);
  auto close = [](const std::vector<double>& x, const std::vector<double>& y) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (std::abs(x[k] - y[k]) > 1e-12) return false;
    }
    return true;
  };
  return close(a.fluxes.q_in, b.fluxes.q_in) && close(a.fluxes.q_out, b.fluxes.q_out) &&
         close(a.trace.rho_bar, b.trace.rho_bar);
}

bool wave_reaches_junction(const FluxModel& model, bool incoming, Density rho0, Density rho) {
  if (rho == rho0) return true;
  const double cr = model.rho_cr();
  if (incoming) {
    // Left state rho, right state rho0.
    if (rho < rho0) return model.flux(rho0) > model.flux(rho);
    return rho <= cr;
  }
  // Left state rho0, right state rho.
  if (rho > rho0) return model.flux(rho) < model.flux(rho0);
  return rho >= cr;
}

namespace {

std::vector<Flux> flux_vector(const JunctionFluxes& q) {
  std::vector<Flux> out(q.q_in);
  out.insert(out.end(), q.q_out.begin(), q.q_out.end());
  return out;
}

}  // namespace

InteractionResult run_interaction(const FluxModel& model, SolverKind solver,
                                  const InteractionExperiment& exp) {
  const auto& spec = exp.spec;
  const auto& eq = exp.equilibrium;
  if (eq.size() != spec.n() + spec.m()) {
    throw DimensionError("interaction experiment needs n + m densities");
  }
  if (exp.road >= eq.size()) throw PreconditionError("perturbed road index out of range");
  if (!is_equilibrium(model, spec, solver, eq, 1e-10)) {
    throw PreconditionError("base datum is not an equilibrium of the solver");
  }
  const bool incoming = exp.road < spec.n();
  if (!wave_reaches_junction(model, incoming, eq[exp.road], exp.rho)) {
    throw PreconditionError("wave on road " + std::to_string(exp.road + 1) +
                            " does not reach the junction");
  }

  InteractionResult r;
  const auto before = solve_riemann(model, spec, solver, eq);
  r.gamma_before = gamma_functional(before.fluxes);
  r.hbar_before = hbar(spec, before.bounds);
  r.flux_before = flux_vector(before.fluxes);
  r.tv_before = std::abs(model.flux(exp.rho) - model.flux(eq[exp.road]));

  auto data = eq;
  data[exp.road] = exp.rho;
  const auto after = solve_riemann(model, spec, solver, data);
  r.gamma_after = gamma_functional(after.fluxes);
  r.hbar_after = hbar(spec, after.bounds);
  r.flux_after = flux_vector(after.fluxes);
  r.trace_after = after.trace.rho_bar;
  for (std::size_t l = 0; l < data.size(); ++l) {
    r.tv_after += std::abs(model.flux(after.trace.rho_bar[l]) - model.flux(data[l]));
  }
  return r;
}

std::string_view to_string(Sign s) {
  switch (s) {
    case Sign::Negative: return "<0";
    case Sign::Zero: return "=0";
    case Sign::Positive: return ">0";
    case Sign::Unspecified: return "any";
  }
  return "?";
}

bool sign_matches(Sign s, double value, double tol) {
  switch (s) {
    case Sign::Negative: return value < -tol;
    case Sign::Zero: return std::abs(value) <= tol;
    case Sign::Positive: return value > tol;
    case Sign::Unspecified: return true;
  }
  return false;
}

InteractionExperiment permute_roads(const InteractionExperiment& exp, std::size_t l1,
                                    std::size_t l2) {
  const auto& spec = exp.spec;
  const std::size_t n = spec.n();
  const std::size_t total = n + spec.m();
  if (l1 >= total || l2 >= total || (l1 < n) != (l2 < n)) {
    throw PreconditionError("can only swap two incoming or two outgoing roads");
  }
  auto rows = spec.rows();
  std::vector<double> p(spec.priorities().begin(), spec.priorities().end());
  if (l1 < n) {
    for (auto& row : rows) std::swap(row[l1], row[l2]);
    std::swap(p[l1], p[l2]);
  } else {
    std::swap(rows[l1 - n], rows[l2 - n]);
  }
  auto data = exp.equilibrium;
  std::swap(data[l1], data[l2]);
  std::size_t road = exp.road;
  if (road == l1) {
    road = l2;
  } else if (road == l2) {
    road = l1;
  }
  return InteractionExperiment{JunctionSpec(std::move(rows), std::move(p)), std::move(data), road,
                               exp.rho};
}

std::vector<InteractionFixture> interaction_fixtures() {
  const FluxModel model = FluxModel::quadratic();
  const JunctionSpec spec({{0.7, 0.4}, {0.3, 0.6}}, {0.5, 0.5});
  auto fr = [&](double q) { return model.inverse_flux(q, Branch::Free); };
  auto cg = [&](double q) { return model.inverse_flux(q, Branch::Congested); };
  using S = Sign;

  // Demand constrained: the priority ray meets the road-2 demand first.
  const std::vector<Density> a_eq{fr(0.22), fr(0.2), fr(0.234), fr(0.186)};
  const std::vector<Density> a3_eq{fr(0.22), fr(0.2), cg(0.234), fr(0.186)};
  // Road 1 at its demand, road 2 limited by the road-3 supply.
  const std::vector<Density> b_eq{fr(0.1), cg(0.2), cg(0.15), fr(0.15)};
  const std::vector<Density> b2_eq{fr(0.1), fr(0.2), cg(0.15), fr(0.15)};
  const std::vector<Density> b4_eq{fr(0.1), cg(0.2), cg(0.15), cg(0.15)};
  // The priority ray meets the road-3 supply first.
  const std::vector<Density> c_eq{cg(0.1), cg(0.1), cg(0.11), fr(0.09)};
  const std::vector<Density> c1_eq{fr(0.1), cg(0.1), cg(0.11), fr(0.09)};
  const std::vector<Density> c4_eq{cg(0.1), cg(0.1), cg(0.11), cg(0.09)};

  auto fx = [&](std::string name, const std::vector<Density>& eq, std::size_t road, Density rho,
                S dg, S dh, bool tv_zero = false) {
    return InteractionFixture{std::move(name), InteractionExperiment{spec, eq, road, rho}, dg, dh,
                              tv_zero};
  };

  std::vector<InteractionFixture> base{
      fx("A1+", a_eq, 0, 0.5, S::Positive, S::Zero),
      fx("A1-", a_eq, 0, fr(0.15), S::Negative, S::Negative),
      fx("A2+", a_eq, 1, 0.5, S::Positive, S::Positive),
      fx("A2-", a_eq, 1, fr(0.15), S::Negative, S::Negative, true),
      fx("A3+", a3_eq, 2, 0.5, S::Zero, S::Zero, true),
      fx("A3-", a_eq, 2, cg(0.15), S::Negative, S::Negative),
      fx("B1+", b_eq, 0, fr(0.2), S::Unspecified, S::Positive),
      fx("B1-", b_eq, 0, fr(0.05), S::Unspecified, S::Negative),
      fx("B2+", b2_eq, 1, 0.4, S::Zero, S::Zero, true),
      fx("B2-", b_eq, 1, fr(0.05), S::Negative, S::Negative, true),
      fx("B3+", b_eq, 2, cg(0.22), S::Positive, S::Zero),
      fx("B3-", b_eq, 2, cg(0.1), S::Negative, S::Negative),
      fx("B4+", b4_eq, 3, 0.5, S::Zero, S::Zero, true),
      fx("C1+", c1_eq, 0, 0.3, S::Zero, S::Zero, true),
      fx("C1-", c_eq, 0, fr(0.05), S::Unspecified, S::Negative),
      fx("C3+", c_eq, 2, cg(0.15), S::Positive, S::Positive),
      fx("C3-", c_eq, 2, cg(0.088), S::Negative, S::Negative),
      fx("C4+", c4_eq, 3, 0.5, S::Zero, S::Zero, true),
  };

  std::vector<InteractionFixture> out = base;
  auto mirror = [&](const std::string& from, std::string name, std::size_t l1, std::size_t l2) {
    for (const auto& f : base) {
      if (f.name != from) continue;
      InteractionFixture g = f;
      g.name = std::move(name);
      g.experiment = permute_roads(f.experiment, l1, l2);
      out.push_back(std::move(g));
    }
  };
  mirror("B3-", "B4-", 2, 3);
  mirror("C1-", "C2-", 0, 1);
  mirror("C3-", "C4-", 2, 3);
  for (const auto& f : base) {
    mirror(f.name, f.name + " [1<->2]", 0, 1);
    mirror(f.name, f.name + " [3<->4]", 2, 3);
  }
  return out;
}

JunctionSpec random_spec(std::size_t n, std::size_t m, bool interior, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> rows(m, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      // Interior draws keep every share away from 0; otherwise some vanish.
      double w = interior ? 0.02 + u(rng) : (u(rng) < 0.25 ? 0.0 : u(rng));
      rows[j][i] = w;
      sum += w;
    }
    if (sum == 0.0) {
      rows[std::uniform_int_distribution<std::size_t>(0, m - 1)(rng)][i] = 1.0;
      sum = 1.0;
    }
    for (std::size_t j = 0; j < m; ++j) rows[j][i] /= sum;
  }
  std::vector<double> p(n);
  double psum = 0.0;
  for (auto& v : p) {
    v = 0.02 + u(rng);
    psum += v;
  }
  for (auto& v : p) v /= psum;
  return JunctionSpec(std::move(rows), std::move(p));
}

namespace {

struct WaveChoice {
  Density rho = 0.0;
  bool decreasing = false;
};

std::optional<WaveChoice> draw_wave(const FluxModel& model, bool incoming, Density rho0,
                                    std::mt19937_64& rng) {
  const double cr = model.rho_cr();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Decreasing waves are shocks, increasing ones rarefactions.
  double dec_lo, dec_hi, inc_lo, inc_hi;
  if (incoming) {
    dec_lo = 0.0;
    dec_hi = rho0 <= cr ? rho0 : model.tau(rho0);
    inc_lo = rho0;
    inc_hi = rho0 < cr ? cr : rho0;
  } else {
    dec_lo = rho0 >= cr ? rho0 : model.tau(rho0);
    dec_hi = 1.0;
    inc_lo = rho0 > cr ? cr : rho0;
    inc_hi = rho0;
  }
  const bool can_dec = dec_hi - dec_lo > 1e-9;
  const bool can_inc = inc_hi - inc_lo > 1e-9;
  if (!can_dec && !can_inc) return std::nullopt;
  const bool dec = can_dec && (!can_inc || u(rng) < 0.5);
  const double lo = dec ? dec_lo : inc_lo;
  const double hi = dec ? dec_hi : inc_hi;
  WaveChoice w{lo + (hi - lo) * u(rng), dec};
  if (!wave_reaches_junction(model, incoming, rho0, w.rho)) return std::nullopt;
  if (model.flux(w.rho) == model.flux(rho0)) return std::nullopt;
  w.decreasing = model.flux(w.rho) < model.flux(rho0);
  return w;
}

}  // namespace

SweepReport check_p2_p3(const FluxModel& model, const SweepConfig& config) {
  SweepReport rep;
  rep.config = config;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double tol = config.zero_tol;
  const std::size_t total = config.n + config.m;
  std::size_t attempts = 0;
  while (rep.experiments < config.experiments) {
    if (++attempts > 100 * config.experiments + 1000) {
      throw NumericalError("could not draw enough admissible interaction experiments");
    }
    const auto spec = random_spec(config.n, config.m, config.strict_interior, rng);
    std::vector<Density> data(total);
    for (auto& v : data) v = u(rng);
    const auto eq = solve_riemann(model, spec, config.solver, data).trace.rho_bar;
    const std::size_t road = std::uniform_int_distribution<std::size_t>(0, total - 1)(rng);
    const auto wave = draw_wave(model, road < config.n, eq[road], rng);
    if (!wave) continue;
    if (!is_equilibrium(model, spec, config.solver, eq, 1e-10)) {
      ++rep.consistency_failures;
      ++rep.experiments;
      continue;
    }
    const auto r = run_interaction(model, config.solver, {spec, eq, road, wave->rho});
    SweepRecord rec{road, wave->decreasing, r.d_flux(), r.d_gamma(), r.d_hbar(), r.d_tv()};
    ++rep.experiments;

    if (rec.d_tv > tol) {
      const double denom = std::min(rec.d_flux, std::abs(rec.d_gamma) + std::abs(rec.d_hbar));
      if (denom <= tol) {
        ++rep.p2_tv_violations;
      } else {
        rep.c_tv = std::max(rep.c_tv, rec.d_tv / denom);
      }
    }
    if (rec.d_hbar > tol) {
      if (rec.d_flux <= tol) {
        ++rep.p2_hbar_violations;
      } else {
        rep.c_hbar = std::max(rep.c_hbar, rec.d_hbar / rec.d_flux);
      }
    }
    if (rec.decreasing) {
      ++rep.decreasing;
      rep.max_d_hbar_decreasing = std::max(rep.max_d_hbar_decreasing, rec.d_hbar);
      if (rec.d_hbar > tol) ++rep.p3_monotonicity_violations;
      if (rec.d_gamma > tol) {
        if (std::abs(rec.d_hbar) <= tol) {
          ++rep.p3_gamma_violations;
        } else {
          rep.c_gamma = std::max(rep.c_gamma, rec.d_gamma / std::abs(rec.d_hbar));
        }
      }
    }
    rep.records.push_back(rec);
  }
  return rep;
}

bool SweepReport::passed() const {
  return consistency_failures == 0 && p3_monotonicity_violations == 0 && p2_tv_violations == 0 &&
         p2_hbar_violations == 0 && p3_gamma_violations == 0 && std::isfinite(c_tv) &&
         std::isfinite(c_hbar) && std::isfinite(c_gamma);
}

std::string SweepReport::summary() const {
  std::ostringstream os;
  os.precision(6);
  os << "solver " << to_string(config.solver) << ", " << config.n << "x" << config.m
     << (config.strict_interior ? " (0 < a < 1)" : "") << ", seed " << config.seed << "\n";
  os << "experiments            " << experiments << " (" << decreasing << " flux-decreasing)\n";
  os << "consistency failures   " << consistency_failures << "\n";
  os << "P3 hbar increases      " << p3_monotonicity_violations
     << " (max dhbar on decreasing waves " << max_d_hbar_decreasing << ")\n";
  os << "P2 TV unbounded        " << p2_tv_violations << "\n";
  os << "P2 hbar unbounded      " << p2_hbar_violations << "\n";
  os << "P3 Gamma unbounded     " << p3_gamma_violations << "\n";
  os << "empirical C            TV " << c_tv << ", hbar " << c_hbar << ", Gamma " << c_gamma
     << "\n";
  return os.str();
}

std::string SweepReport::csv() const {
  std::string out = "road,direction,d_flux,d_gamma,d_hbar,d_tv\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%.17g,%.17g\n", r.road + 1,
                  r.decreasing ? "decreasing" : "increasing", r.d_flux, r.d_gamma, r.d_hbar,
                  r.d_tv);
    out += buf;
  }
  return out;
}

P1SweepReport p1_sweep(const FluxModel& model, SolverKind solver, std::size_t n, std::size_t m,
                       std::size_t experiments, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double cr = model.rho_cr();
  P1SweepReport rep;
  for (std::size_t e = 0; e < experiments; ++e) {
    const auto spec = random_spec(n, m, false, rng);
    std::vector<Density> base(n + m);
    for (auto& v : base) v = u(rng);
    auto moved = base;
    for (std::size_t l = 0; l < base.size(); ++l) {
      const bool incoming = l < n;
      if (!is_good_datum(model, incoming, base[l]) || u(rng) < 0.3) continue;
      moved[l] = incoming ? cr + (1.0 - cr) * u(rng) : cr * u(rng);
    }
    ++rep.experiments;
    if (!check_p1(model, spec, solver, base, moved)) ++rep.failures;
  }
  return rep;
}

}  // namespace netlwr
