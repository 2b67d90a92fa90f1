#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "netlwr/errors.hpp"
#include "netlwr/junction.hpp"

namespace netlwr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSumTol = 1e-12;
constexpr double kTieTol = 1e-12;

bool ties(double h, double hbar) { return h <= hbar + kTieTol * hbar; }

void validate(const JunctionSpec& spec, const ConstraintBounds& b) {
  if (b.gamma_max_in.size() != spec.n() || b.gamma_max_out.size() != spec.m()) {
    std::ostringstream os;
    os << "constraint bounds have " << b.gamma_max_in.size() << " demands and "
       << b.gamma_max_out.size() << " supplies, junction is " << spec.n() << "x" << spec.m();
    throw DimensionError(os.str());
  }
  auto check = [](const std::vector<Flux>& v, const char* what) {
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!std::isfinite(v[k]) || v[k] < 0.0) {
        throw DomainError(std::string(what) + " bound " + std::to_string(k + 1) +
                          " must be finite and non-negative");
      }
    }
  };
  check(b.gamma_max_in, "demand");
  check(b.gamma_max_out, "supply");
}

std::vector<Flux> apply_matrix(const JunctionSpec& spec, std::span<const Flux> q_in) {
  std::vector<Flux> out(spec.m(), 0.0);
  for (std::size_t j = 0; j < spec.m(); ++j) {
    for (std::size_t i = 0; i < spec.n(); ++i) out[j] += spec.a(j, i) * q_in[i];
  }
  return out;
}

enum class Softness { Strict, Soft };

// Shared recursion behind both priority solvers. They differ only in which
// unfixed roads a binding supply freezes.
JunctionFluxes priority_recursion(const JunctionSpec& spec, const ConstraintBounds& bounds,
                                  Softness softness, RecursionTrace* trace) {
  validate(spec, bounds);
  const std::size_t n = spec.n();
  const std::size_t m = spec.m();

  std::vector<Flux> q(n, 0.0);
  std::vector<bool> fixed(n, false);
  std::vector<bool> saturated(m, false);
  std::size_t nfixed = 0;
  double first_hbar = 0.0;
  double prev_hbar = 0.0;

  for (std::size_t iteration = 0; nfixed < n; ++iteration) {
    if (iteration >= n) {
      throw NumericalError("priority recursion did not terminate within n steps");
    }
    RecursionStep step;
    step.h_in.assign(n, std::nullopt);
    step.h_out.assign(m, kInf);

    double h = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) continue;
      step.h_in[i] = bounds.gamma_max_in[i] / spec.priority(i);
      h = std::min(h, *step.h_in[i]);
    }
    for (std::size_t j = 0; j < m; ++j) {
      double load = 0.0;
      double slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (fixed[i]) {
          load += spec.a(j, i) * q[i];
        } else {
          slope += spec.a(j, i) * spec.priority(i);
        }
      }
      if (slope == 0.0) {
        // Constraint no longer moves with h; earlier steps kept it satisfied.
        if (load > bounds.gamma_max_out[j] + 1e-12) {
          throw NumericalError("fixed fluxes exceed supply of outgoing road " +
                               std::to_string(n + j + 1));
        }
        continue;
      }
      step.h_out[j] = std::max(0.0, bounds.gamma_max_out[j] - load) / slope;
      h = std::min(h, step.h_out[j]);
    }

    if (iteration == 0) first_hbar = h;
    if (h < prev_hbar * (1.0 - 1e-12) - 1e-15) {
      throw NumericalError("priority recursion produced a decreasing h sequence");
    }
    prev_hbar = h;
    step.hbar = h;

    for (std::size_t j = 0; j < m; ++j) {
      if (ties(step.h_out[j], h)) {
        step.binding_out.push_back(j);
        saturated[j] = true;
      }
    }
    step.supply_binding = !step.binding_out.empty();

    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) continue;
      bool freeze = false;
      if (step.supply_binding) {
        if (softness == Softness::Strict) {
          freeze = true;
        } else {
          freeze = std::any_of(step.binding_out.begin(), step.binding_out.end(),
                               [&](std::size_t j) { return spec.a(j, i) != 0.0; });
        }
      } else {
        freeze = ties(*step.h_in[i], h);
      }
      if (freeze) step.fixed.push_back(i);
    }
    if (step.fixed.empty()) {
      throw NumericalError("priority recursion step fixed no incoming road");
    }
    for (std::size_t i : step.fixed) {
      // A road whose own demand is the minimizer takes it exactly.
      q[i] = *step.h_in[i] == h ? bounds.gamma_max_in[i] : h * spec.priority(i);
      fixed[i] = true;
      ++nfixed;
    }
    if (trace) trace->push_back(std::move(step));
  }

  JunctionFluxes out;
  out.q_out = apply_matrix(spec, q);
  // Every road feeding a binding supply froze with it, so its load stayed at the bound.
  for (std::size_t j = 0; j < m; ++j) {
    if (saturated[j]) out.q_out[j] = bounds.gamma_max_out[j];
  }
  out.q_in = std::move(q);
  out.hbar = first_hbar;
  return out;
}

// Solves the k x k system in place; false if (numerically) singular.
bool solve_dense(std::vector<double>& mat, std::vector<double>& rhs, std::size_t k) {
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r) {
      if (std::abs(mat[r * k + col]) > std::abs(mat[piv * k + col])) piv = r;
    }
    if (std::abs(mat[piv * k + col]) < 1e-13) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < k; ++c) std::swap(mat[piv * k + c], mat[col * k + c]);
      std::swap(rhs[piv], rhs[col]);
    }
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const double factor = mat[r * k + col] / mat[col * k + col];
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < k; ++c) mat[r * k + c] -= factor * mat[col * k + c];
      rhs[r] -= factor * rhs[col];
    }
  }
  for (std::size_t r = 0; r < k; ++r) rhs[r] /= mat[r * k + r];
  return true;
}

bool lexicographically_better(std::span<const double> cand, double cand_sum,
                              std::span<const double> best, double best_sum) {
  if (cand_sum > best_sum + kTieTol) return true;
  if (cand_sum < best_sum - kTieTol) return false;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (cand[i] > best[i] + kTieTol) return true;
    if (cand[i] < best[i] - kTieTol) return false;
  }
  return false;
}

}  // namespace

JunctionSpec::JunctionSpec(std::vector<std::vector<double>> rows, std::vector<double> priorities)
    : n_(priorities.size()), m_(rows.size()), p_(std::move(priorities)) {
  if (n_ == 0 || m_ == 0) {
    throw SpecError("junction needs at least one incoming and one outgoing road");
  }
  a_.reserve(n_ * m_);
  for (std::size_t j = 0; j < m_; ++j) {
    if (rows[j].size() != n_) {
      std::ostringstream os;
      os << "distribution matrix row " << j + 1 << " has " << rows[j].size()
         << " entries, expected " << n_ << " (one per incoming road)";
      throw SpecError(os.str());
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const double v = rows[j][i];
      if (!(v >= 0.0 && v <= 1.0)) {
        std::ostringstream os;
        os << "distribution matrix entry (" << j + 1 << ", " << i + 1 << ") = " << v
           << " outside [0, 1]";
        throw SpecError(os.str());
      }
      a_.push_back(v);
    }
  }
  for (std::size_t i = 0; i < n_; ++i) {
    double col = 0.0;
    for (std::size_t j = 0; j < m_; ++j) col += a(j, i);
    if (std::abs(col - 1.0) > kSumTol) {
      std::ostringstream os;
      os.precision(17);
      os << "distribution matrix column " << i + 1 << " sums to " << col << ", expected 1";
      throw SpecError(os.str());
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (!(p_[i] > 0.0)) {
      std::ostringstream os;
      os << "priority " << i + 1 << " = " << p_[i] << " must be positive";
      throw SpecError(os.str());
    }
    total += p_[i];
  }
  if (std::abs(total - 1.0) > kSumTol) {
    std::ostringstream os;
    os.precision(17);
    os << "priorities sum to " << total << ", expected 1";
    throw SpecError(os.str());
  }
  ray_load_.assign(m_, 0.0);
  for (std::size_t j = 0; j < m_; ++j) {
    for (std::size_t i = 0; i < n_; ++i) ray_load_[j] += a(j, i) * p_[i];
  }
}

std::vector<std::vector<double>> JunctionSpec::rows() const {
  std::vector<std::vector<double>> out(m_, std::vector<double>(n_));
  for (std::size_t j = 0; j < m_; ++j) {
    for (std::size_t i = 0; i < n_; ++i) out[j][i] = a(j, i);
  }
  return out;
}

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::Prs:
      return "prs";
    case SolverKind::Sprs:
      return "sprs";
    case SolverKind::MaxFlux:
      return "maxflux";
  }
  return "?";
}

SolverKind parse_solver_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "prs") return SolverKind::Prs;
  if (lower == "sprs") return SolverKind::Sprs;
  if (lower == "maxflux") return SolverKind::MaxFlux;
  throw ScenarioError("unknown solver '" + std::string(name) + "' (expected prs, sprs or maxflux)");
}

ConstraintBounds bounds_from_data(const FluxModel& model, const JunctionSpec& spec,
                                  std::span<const Density> rho0) {
  if (rho0.size() != spec.n() + spec.m()) {
    std::ostringstream os;
    os << "junction data has " << rho0.size() << " densities, expected " << spec.n() + spec.m();
    throw DimensionError(os.str());
  }
  ConstraintBounds b;
  b.gamma_max_in.reserve(spec.n());
  b.gamma_max_out.reserve(spec.m());
  for (std::size_t i = 0; i < spec.n(); ++i) b.gamma_max_in.push_back(model.demand(rho0[i]));
  for (std::size_t j = 0; j < spec.m(); ++j) {
    b.gamma_max_out.push_back(model.supply(rho0[spec.n() + j]));
  }
  return b;
}

double hbar(const JunctionSpec& spec, const ConstraintBounds& bounds) {
  validate(spec, bounds);
  double h = kInf;
  for (std::size_t i = 0; i < spec.n(); ++i) {
    h = std::min(h, bounds.gamma_max_in[i] / spec.priority(i));
  }
  for (std::size_t j = 0; j < spec.m(); ++j) {
    if (spec.ray_load(j) == 0.0) continue;
    h = std::min(h, bounds.gamma_max_out[j] / spec.ray_load(j));
  }
  return h;
}

JunctionFluxes solve_prs(const JunctionSpec& spec, const ConstraintBounds& bounds,
                         RecursionTrace* trace) {
  return priority_recursion(spec, bounds, Softness::Strict, trace);
}

JunctionFluxes solve_sprs(const JunctionSpec& spec, const ConstraintBounds& bounds,
                          RecursionTrace* trace) {
  return priority_recursion(spec, bounds, Softness::Soft, trace);
}

JunctionFluxes solve_maxflux_baseline(const JunctionSpec& spec, const ConstraintBounds& bounds) {
  validate(spec, bounds);
  const std::size_t n = spec.n();
  const std::size_t m = spec.m();
  if (n > m) {
    std::ostringstream os;
    os << "max-flux baseline needs at most as many incoming as outgoing roads (junction is "
       << n << "x" << m << ")";
    throw UnsupportedJunctionError(os.str());
  }

  // Omega as rows g . x <= b: -x_i <= 0, x_i <= demand_i, (A x)_j <= supply_j.
  const std::size_t k = 2 * n + m;
  std::vector<double> g(k * n, 0.0);
  std::vector<double> rhs(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    g[i * n + i] = -1.0;
    g[(n + i) * n + i] = 1.0;
    rhs[n + i] = bounds.gamma_max_in[i];
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) g[(2 * n + j) * n + i] = spec.a(j, i);
    rhs[2 * n + j] = bounds.gamma_max_out[j];
  }

  std::vector<double> best(n, 0.0);
  double best_sum = -kInf;
  std::vector<std::size_t> pick(n);
  std::iota(pick.begin(), pick.end(), 0);
  std::vector<double> mat(n * n);
  std::vector<double> x(n);
  while (true) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) mat[r * n + c] = g[pick[r] * n + c];
      x[r] = rhs[pick[r]];
    }
    if (solve_dense(mat, x, n)) {
      bool feasible = true;
      for (std::size_t r = 0; r < k && feasible; ++r) {
        double lhs = 0.0;
        for (std::size_t c = 0; c < n; ++c) lhs += g[r * n + c] * x[c];
        feasible = lhs <= rhs[r] + 1e-12;
      }
      if (feasible) {
        const double sum = std::accumulate(x.begin(), x.end(), 0.0);
        if (lexicographically_better(x, sum, best, best_sum)) {
          best = x;
          best_sum = sum;
        }
      }
    }
    // Next n-combination of the k constraint rows.
    std::size_t pos = n;
    while (pos > 0 && pick[pos - 1] == k - n + pos - 1) --pos;
    if (pos == 0) break;
    ++pick[pos - 1];
    for (std::size_t r = pos; r < n; ++r) pick[r] = pick[r - 1] + 1;
  }

  for (std::size_t i = 0; i < n; ++i) best[i] = std::clamp(best[i], 0.0, bounds.gamma_max_in[i]);
  JunctionFluxes out;
  out.q_out = apply_matrix(spec, best);
  out.q_in = std::move(best);
  out.hbar = hbar(spec, bounds);
  return out;
}

JunctionFluxes solve_junction(SolverKind kind, const JunctionSpec& spec,
                              const ConstraintBounds& bounds, RecursionTrace* trace) {
  switch (kind) {
    case SolverKind::Prs:
      return solve_prs(spec, bounds, trace);
    case SolverKind::Sprs:
      return solve_sprs(spec, bounds, trace);
    case SolverKind::MaxFlux:
      return solve_maxflux_baseline(spec, bounds);
  }
  throw Error("unknown solver kind");
}

bool in_feasible_set(const JunctionSpec& spec, const ConstraintBounds& bounds,
                     std::span<const Flux> gamma, double slack) {
  if (gamma.size() != spec.n()) return false;
  for (std::size_t i = 0; i < spec.n(); ++i) {
    if (gamma[i] < -slack || gamma[i] > bounds.gamma_max_in[i] + slack) return false;
  }
  const auto out = apply_matrix(spec, gamma);
  for (std::size_t j = 0; j < spec.m(); ++j) {
    if (out[j] > bounds.gamma_max_out[j] + slack) return false;
  }
  return true;
}

}  // namespace netlwr
