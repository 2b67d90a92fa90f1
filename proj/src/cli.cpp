#include "netlwr/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "netlwr/diagnostics.hpp"
#include "netlwr/errors.hpp"
#include "netlwr/results.hpp"
#include "netlwr/scenario.hpp"

namespace netlwr::cli {

namespace {

struct Source {
  std::string builtin;
  std::string path;
  std::string solver;
  double dx = 0.0;
  double final_time = -1.0;
  double cfl = 0.0;
};

void add_source_options(CLI::App* sub, Source& src) {
  auto* b = sub->add_option("--builtin", src.builtin, "Built-in scenario: case1, case2, case3");
  auto* s = sub->add_option("--scenario", src.path, "Scenario file (JSON)");
  b->excludes(s);
  s->excludes(b);
  sub->add_option("--dx", src.dx, "Cell width override for every road");
  sub->add_option("--T", src.final_time, "Final time override");
  sub->add_option("--cfl", src.cfl, "CFL safety factor in (0, 1]");
}

Scenario load(const Source& src) {
  if (src.builtin.empty() == src.path.empty()) {
    throw CLI::ValidationError("give exactly one of --builtin or --scenario");
  }
  Scenario s = src.builtin.empty() ? load_scenario(src.path) : builtin_scenario(src.builtin);
  if (!src.solver.empty()) s.solver = parse_solver_kind(src.solver);
  if (src.dx > 0.0) apply_dx(s, src.dx);
  if (src.final_time >= 0.0) {
    s.final_time = src.final_time;
    std::erase_if(s.sample_times, [&](double t) { return t > s.final_time; });
  }
  if (src.cfl > 0.0) s.cfl_safety = src.cfl;
  validate_scenario(s);
  return s;
}

std::string output_dir(const std::string& flag, const Scenario& s) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("NETLWR_OUT"); env && *env) return env;
  if (!s.output_dir.empty()) return s.output_dir;
  return "netlwr_out/" + (s.name.empty() ? std::string("run") : s.name);
}

std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "(";
  for (std::size_t k = 0; k < v.size(); ++k) os << (k ? ", " : "") << v[k];
  os << ")";
  return os.str();
}

std::vector<double> junction_end_flux(const Trajectory& tr) {
  const auto& net = tr.final_state;
  std::vector<double> q(net.roads.size(), std::nan(""));
  if (tr.steps.empty()) return q;
  const auto& last = tr.steps.back();
  for (std::size_t r = 0; r < net.roads.size(); ++r) {
    const auto& road = net.roads[r];
    if (std::holds_alternative<JunctionAttachment>(road.right)) {
      q[r] = last.boundary[r].right;
    } else if (std::holds_alternative<JunctionAttachment>(road.left)) {
      q[r] = last.boundary[r].left;
    }
  }
  return q;
}

int cmd_run(const Source& src, const std::string& out_flag, std::ostream& out) {
  const Scenario s = load(src);
  const auto tr = run_scenario(s);
  const auto dir = output_dir(out_flag, s);
  const auto files = write_results(tr, s, dir);

  out << std::setprecision(12);
  out << "scenario " << (s.name.empty() ? "(unnamed)" : s.name) << ", solver "
      << to_string(s.solver) << ", " << tr.steps.size() << " steps to T = " << s.final_time
      << "\n";
  const auto& net = tr.final_state;
  if (!tr.steps.empty()) {
    const auto& last = tr.steps.back();
    for (std::size_t k = 0; k < net.junctions.size(); ++k) {
      const auto& q = last.junctions[k];
      out << "junction " << net.junctions[k].id << ": Gamma = " << gamma_functional(q)
          << ", hbar = " << q.hbar << ", q_in = " << join(q.q_in) << ", q_out = " << join(q.q_out)
          << "\n";
    }
    out << "road  left flux       right flux\n";
    for (std::size_t r = 0; r < net.roads.size(); ++r) {
      out << std::left << std::setw(6) << net.roads[r].id << std::setw(16)
          << last.boundary[r].left << last.boundary[r].right << "\n";
    }
  }
  out << "wrote " << files.size() << " files to " << dir << "\n";
  return kOk;
}

int cmd_compare(const Source& src, const std::vector<std::string>& solvers,
                const std::string& out_flag, std::ostream& out) {
  Scenario base = load(src);
  std::vector<SolverKind> kinds;
  for (const auto& name : solvers) kinds.push_back(parse_solver_kind(name));
  // Reject inapplicable solvers before running anything.
  for (auto kind : kinds) {
    Scenario s = base;
    s.solver = kind;
    validate_scenario(s);
  }

  std::vector<Trajectory> runs;
  for (auto kind : kinds) {
    Scenario s = base;
    s.solver = kind;
    runs.push_back(run_scenario(s));
    if (!out_flag.empty()) {
      write_results(runs.back(), s, std::filesystem::path(out_flag) / std::string(to_string(kind)));
    }
  }

  out << std::setprecision(10);
  const auto net = build_network(base);
  out << "initial junction traces\n";
  for (std::size_t k = 0; k < net.junctions.size(); ++k) {
    const auto data = junction_data(net, k);
    for (auto kind : kinds) {
      const auto sol = solve_riemann(net.model, net.junctions[k].spec, kind, data);
      out << "  " << net.junctions[k].id << " " << std::left << std::setw(8) << to_string(kind)
          << "q = " << join(sol.fluxes.q_in) << " -> " << join(sol.fluxes.q_out)
          << ", rho_bar = " << join(sol.trace.rho_bar) << "\n";
    }
  }

  out << "junction-end flux at T\n  road  ";
  for (auto kind : kinds) out << std::left << std::setw(16) << to_string(kind);
  out << "\n";
  std::vector<std::vector<double>> q;
  for (const auto& tr : runs) q.push_back(junction_end_flux(tr));
  for (std::size_t r = 0; r < net.roads.size(); ++r) {
    out << "  " << std::left << std::setw(6) << net.roads[r].id;
    for (const auto& col : q) out << std::setw(16) << col[r];
    out << "\n";
  }

  out << "L1 density gap at T against " << to_string(kinds.front()) << "\n";
  for (std::size_t s = 1; s < runs.size(); ++s) {
    out << "  " << to_string(kinds[s]) << ":";
    for (std::size_t r = 0; r < net.roads.size(); ++r) {
      const auto& a = runs.front().final_state.roads[r];
      const auto& b = runs[s].final_state.roads[r];
      double gap = 0.0;
      for (std::size_t k = 0; k < a.rho.size(); ++k) gap += a.dx * std::abs(a.rho[k] - b.rho[k]);
      out << " road " << a.id << " " << gap << (r + 1 < net.roads.size() ? "," : "");
    }
    out << "\n";
  }
  return kOk;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ScenarioError(std::string(what) + ": cannot read number '" + item + "'");
    }
  }
  return v;
}

int cmd_riemann(const Source& src, const std::string& a_text, const std::string& p_text,
                const std::string& rho_text, std::ostream& out) {
  FluxModel model = FluxModel::quadratic();
  std::vector<std::vector<double>> rows;
  std::vector<double> p;
  std::vector<Density> rho;
  SolverKind solver = src.solver.empty() ? SolverKind::Prs : parse_solver_kind(src.solver);
  if (!src.builtin.empty() || !src.path.empty()) {
    if (!a_text.empty() || !p_text.empty() || !rho_text.empty()) {
      throw CLI::ValidationError("inline --A/--P/--rho cannot be combined with a scenario");
    }
    const Scenario s = load(src);
    if (s.junctions.empty()) throw ScenarioError("scenario has no junction");
    solver = s.solver;
    const auto net = build_network(s);
    model = net.model;
    rows = net.junctions.front().spec.rows();
    const auto pr = net.junctions.front().spec.priorities();
    p.assign(pr.begin(), pr.end());
    rho = junction_data(net, 0);
  } else {
    if (a_text.empty() || p_text.empty() || rho_text.empty()) {
      throw CLI::ValidationError("give --builtin, --scenario or all of --A, --P, --rho");
    }
    std::stringstream ss(a_text);
    std::string row;
    while (std::getline(ss, row, ';')) rows.push_back(parse_list(row, "--A"));
    p = parse_list(p_text, "--P");
    rho = parse_list(rho_text, "--rho");
  }
  JunctionSpec spec = [&] {
    try {
      return JunctionSpec(rows, p);
    } catch (const SpecError& e) {
      throw ScenarioError(e.what());
    }
  }();
  if (rho.size() != spec.n() + spec.m()) {
    throw DimensionError("--rho has " + std::to_string(rho.size()) + " densities, expected " +
                         std::to_string(spec.n() + spec.m()));
  }
  for (std::size_t l = 0; l < rho.size(); ++l) {
    if (!(rho[l] >= 0.0 && rho[l] <= 1.0)) {
      throw ScenarioError("--rho: density of road " + std::to_string(l + 1) + " outside [0, 1]");
    }
  }

  RecursionTrace steps;
  const auto sol = solve_riemann(model, spec, solver, rho, &steps);
  out << std::setprecision(12);
  out << "solver " << to_string(solver) << ", n = " << spec.n() << ", m = " << spec.m() << "\n";
  out << "gamma_max_in  = " << join(sol.bounds.gamma_max_in) << "\n";
  out << "gamma_max_out = " << join(sol.bounds.gamma_max_out) << "\n";
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto& st = steps[k];
    out << "step " << k + 1 << ":";
    for (std::size_t i = 0; i < st.h_in.size(); ++i) {
      out << " h" << i + 1 << " = ";
      if (st.h_in[i]) {
        out << *st.h_in[i];
      } else {
        out << "fixed";
      }
    }
    for (std::size_t j = 0; j < st.h_out.size(); ++j) {
      out << " h" << spec.n() + j + 1 << " = " << st.h_out[j];
    }
    out << "\n  hbar = " << st.hbar;
    if (st.supply_binding) {
      out << ", supply binds on road";
      for (auto j : st.binding_out) out << " " << spec.n() + j + 1;
    }
    out << ", fixes road";
    for (auto i : st.fixed) out << " " << i + 1;
    out << "\n";
  }
  std::vector<double> aq(spec.m(), 0.0);
  for (std::size_t j = 0; j < spec.m(); ++j) {
    for (std::size_t i = 0; i < spec.n(); ++i) aq[j] += spec.a(j, i) * sol.fluxes.q_in[i];
  }
  out << "Q       = " << join(sol.fluxes.q_in) << "\n";
  out << "A Q     = " << join(aq) << "\n";
  out << "hbar    = " << hbar(spec, sol.bounds) << "\n";
  out << "rho_bar = " << join(sol.trace.rho_bar) << "\n";
  return kOk;
}

struct VerifyOptions {
  std::string solver = "prs";
  std::uint64_t seed = 1;
  std::size_t sweeps = 10000;
  std::size_t n = 2;
  std::size_t m = 2;
  bool report_only = false;
  bool allow_boundary = false;
  double tol = 1e-12;
  std::string out;
};

int cmd_verify(const VerifyOptions& opt, std::ostream& out) {
  const FluxModel model = FluxModel::quadratic();
  const SolverKind solver = parse_solver_kind(opt.solver);
  const bool in_regime = opt.n <= 2 && opt.m <= 2 && !opt.allow_boundary;
  if (!opt.report_only && !in_regime) {
    throw CLI::ValidationError(
        "assertion mode needs n, m <= 2 with 0 < a_ji < 1; use --report-only for other sweeps");
  }
  bool ok = true;
  out << std::setprecision(6);

  if (solver != SolverKind::MaxFlux) {
    std::size_t fixture_fail = 0;
    const auto fixtures = interaction_fixtures();
    for (const auto& f : fixtures) {
      const auto r = run_interaction(model, solver, f.experiment);
      const bool pass = sign_matches(f.d_gamma, r.d_gamma(), 1e-10) &&
                        sign_matches(f.d_hbar, r.d_hbar(), 1e-10) &&
                        (!f.tv_zero || std::abs(r.d_tv()) <= 1e-10);
      if (!pass) {
        ++fixture_fail;
        out << "fixture " << f.name << " FAILED: dGamma " << r.d_gamma() << " (want "
            << to_string(f.d_gamma) << "), dhbar " << r.d_hbar() << " (want "
            << to_string(f.d_hbar) << "), dTV " << r.d_tv() << "\n";
      }
    }
    out << "interaction fixtures   " << fixtures.size() - fixture_fail << "/" << fixtures.size()
        << " reproduce the stated signs\n";
    if (solver == SolverKind::Prs) ok = ok && fixture_fail == 0;
  }

  const auto p1 = p1_sweep(model, solver, opt.n, opt.m, opt.sweeps, opt.seed);
  out << "P1 good-data sweeps    " << p1.experiments - p1.failures << "/" << p1.experiments
      << " unchanged\n";
  ok = ok && p1.failures == 0;

  SweepConfig cfg;
  cfg.solver = solver;
  cfg.n = opt.n;
  cfg.m = opt.m;
  cfg.experiments = opt.sweeps;
  cfg.seed = opt.seed;
  cfg.strict_interior = !opt.allow_boundary;
  cfg.zero_tol = opt.tol;
  const auto rep = check_p2_p3(model, cfg);
  out << rep.summary();
  ok = ok && rep.passed();

  if (!opt.out.empty()) {
    std::filesystem::create_directories(opt.out);
    write_file_atomic(std::filesystem::path(opt.out) / "sweep.csv", rep.csv());
    write_file_atomic(std::filesystem::path(opt.out) / "summary.txt", rep.summary());
  }
  if (opt.report_only) {
    out << "report only\n";
    return kOk;
  }
  out << (ok ? "verification passed\n" : "verification FAILED\n");
  return ok ? kOk : kFailure;
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Priority Riemann solvers and Godunov simulation of LWR traffic on networks"};
  app.name("netlwr");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Source src;
  std::string out_dir;
  std::vector<std::string> solvers{"prs", "sprs"};
  std::string a_text, p_text, rho_text;
  VerifyOptions vopt;

  auto* run = app.add_subcommand("run", "Simulate a scenario and write CSV results");
  add_source_options(run, src);
  run->add_option("--solver", src.solver, "prs, sprs or maxflux");
  run->add_option("--out", out_dir, "Output directory (default $NETLWR_OUT)");

  auto* compare = app.add_subcommand("compare", "Run one scenario under several solvers");
  add_source_options(compare, src);
  compare->add_option("--solvers", solvers, "Solvers to compare")->delimiter(',');
  compare->add_option("--out", out_dir, "Also write each run under <dir>/<solver>");

  auto* riemann = app.add_subcommand("riemann", "Solve one junction Riemann problem");
  add_source_options(riemann, src);
  riemann->add_option("--solver", src.solver, "prs, sprs or maxflux");
  riemann->add_option("--A", a_text, "Distribution matrix, rows split by ';'");
  riemann->add_option("--P", p_text, "Priorities, comma separated");
  riemann->add_option("--rho", rho_text, "Junction data, incoming then outgoing");

  auto* verify = app.add_subcommand("verify", "Interaction fixtures and property sweeps");
  verify->add_option("--solver", vopt.solver, "prs, sprs or maxflux");
  verify->add_option("--seed", vopt.seed, "Sweep seed");
  verify->add_option("--sweeps", vopt.sweeps, "Experiments per sweep")->check(CLI::PositiveNumber);
  verify->add_option("--n", vopt.n, "Incoming roads")->check(CLI::Range(1, 8));
  verify->add_option("--m", vopt.m, "Outgoing roads")->check(CLI::Range(1, 8));
  verify->add_flag("--allow-boundary", vopt.allow_boundary, "Allow a_ji = 0 in random specs");
  auto* assert_flag = verify->add_flag("--assert", "Fail on any violation (default)");
  auto* report = verify->add_flag("--report-only", vopt.report_only, "Report without failing");
  assert_flag->excludes(report);
  verify->add_option("--tol", vopt.tol, "Deltas at or below this count as zero");
  verify->add_option("--out", vopt.out, "Write sweep.csv and summary.txt here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "netlwr: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (run->parsed()) return cmd_run(src, out_dir, out);
    if (compare->parsed()) return cmd_compare(src, solvers, out_dir, out);
    if (riemann->parsed()) return cmd_riemann(src, a_text, p_text, rho_text, out);
    if (verify->parsed()) return cmd_verify(vopt, out);
  } catch (const CLI::ValidationError& e) {
    err << "netlwr: " << e.what() << "\n";
    return kUsage;
  } catch (const ScenarioError& e) {
    err << "netlwr: scenario error: " << e.what() << "\n";
    return kScenario;
  } catch (const UnsupportedJunctionError& e) {
    err << "netlwr: unsupported: " << e.what() << "\n";
    return kScenario;
  } catch (const DimensionError& e) {
    err << "netlwr: " << e.what() << "\n";
    return kScenario;
  } catch (const SpecError& e) {
    err << "netlwr: " << e.what() << "\n";
    return kScenario;
  } catch (const std::exception& e) {
    err << "netlwr: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace netlwr::cli
