#include "netlwr/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "netlwr/errors.hpp"

namespace netlwr {

using json = nlohmann::json;

namespace {

constexpr double kCoverTol = 1e-12;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ScenarioError(where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  fail(where, "expected a string");
}

std::vector<double> as_numbers(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    out.push_back(as_number(v[k], where + "[" + std::to_string(k) + "]"));
  }
  return out;
}

std::vector<std::string> as_strings(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of road ids");
  std::vector<std::string> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    out.push_back(as_string(v[k], where + "[" + std::to_string(k) + "]"));
  }
  return out;
}

FluxModel parse_flux(const json& v) {
  if (v.is_string()) {
    if (v.get<std::string>() == "quadratic") return FluxModel::quadratic();
    fail("flux", "unknown flux model '" + v.get<std::string>() + "'");
  }
  const json& table = require(v, "table", "flux");
  if (!table.is_array()) fail("flux.table", "expected an array of [rho, f] pairs");
  std::vector<FluxModel::Sample> samples;
  for (std::size_t k = 0; k < table.size(); ++k) {
    const std::string where = "flux.table[" + std::to_string(k) + "]";
    const auto pair = as_numbers(table[k], where);
    if (pair.size() != 2) fail(where, "expected [rho, f]");
    samples.emplace_back(pair[0], pair[1]);
  }
  const double lipschitz = as_number(require(v, "lipschitz", "flux"), "flux.lipschitz");
  try {
    return FluxModel::tabulated(std::move(samples), lipschitz);
  } catch (const DomainError& e) {
    fail("flux", e.what());
  }
}

json flux_to_json(const FluxModel& model) {
  if (model.kind() == FluxModel::Kind::Quadratic) return "quadratic";
  json table = json::array();
  for (const auto& [rho, f] : model.samples()) table.push_back({rho, f});
  return {{"table", table}, {"lipschitz", model.lipschitz_bound()}};
}

RoadDecl parse_road(const json& v, const std::string& where) {
  RoadDecl road;
  road.id = as_string(require(v, "id", where), where + ".id");
  const std::string here = where + " (road '" + road.id + "')";
  road.length = as_number(require(v, "length", here), here + ".length");
  if (!(road.length > 0.0)) fail(here + ".length", "must be positive");
  const bool has_cells = v.contains("cells");
  const bool has_dx = v.contains("dx");
  if (has_cells == has_dx) fail(here, "give exactly one of 'cells' or 'dx'");
  if (has_cells) {
    const json& c = v["cells"];
    if (!c.is_number_integer() || c.get<long long>() < 2) {
      fail(here + ".cells", "must be an integer >= 2");
    }
    road.cells = static_cast<std::size_t>(c.get<long long>());
  } else {
    const double dx = as_number(v["dx"], here + ".dx");
    if (!(dx > 0.0)) fail(here + ".dx", "must be positive");
    const double count = road.length / dx;
    if (std::abs(count - std::round(count)) > 1e-9 * std::max(1.0, count)) {
      fail(here + ".dx", "does not divide the road length into whole cells");
    }
    road.cells = static_cast<std::size_t>(std::llround(count));
  }
  if (v.contains("x0")) road.x0 = as_number(v["x0"], here + ".x0");

  const json& init = require(v, "initial", here);
  if (init.is_number()) {
    road.initial.push_back({0.0, road.length, init.get<double>()});
  } else if (init.is_array()) {
    for (std::size_t k = 0; k < init.size(); ++k) {
      const std::string seg = here + ".initial[" + std::to_string(k) + "]";
      InitialSegment s;
      s.from = as_number(require(init[k], "from", seg), seg + ".from");
      s.to = as_number(require(init[k], "to", seg), seg + ".to");
      s.rho = as_number(require(init[k], "rho", seg), seg + ".rho");
      road.initial.push_back(s);
    }
  } else {
    fail(here + ".initial", "expected a density or an array of {from, to, rho} segments");
  }
  if (v.contains("left_ghost")) road.left_ghost = as_number(v["left_ghost"], here + ".left_ghost");
  if (v.contains("right_ghost")) {
    road.right_ghost = as_number(v["right_ghost"], here + ".right_ghost");
  }
  return road;
}

JunctionDecl parse_junction(const json& v, const std::string& where) {
  JunctionDecl j;
  j.id = as_string(require(v, "id", where), where + ".id");
  const std::string here = where + " (junction '" + j.id + "')";
  j.incoming = as_strings(require(v, "incoming", here), here + ".incoming");
  j.outgoing = as_strings(require(v, "outgoing", here), here + ".outgoing");
  const json& a = require(v, "A", here);
  if (!a.is_array()) fail(here + ".A", "expected an array of rows");
  for (std::size_t r = 0; r < a.size(); ++r) {
    j.distribution.push_back(as_numbers(a[r], here + ".A[" + std::to_string(r) + "]"));
  }
  j.priorities = as_numbers(require(v, "P", here), here + ".P");
  return j;
}

json to_json(const Scenario& s) {
  json doc;
  doc["name"] = s.name;
  doc["flux"] = flux_to_json(s.flux);
  doc["solver"] = std::string(to_string(s.solver));
  doc["T"] = s.final_time;
  doc["cfl"] = s.cfl_safety;
  doc["sample_times"] = s.sample_times;
  if (!s.output_dir.empty()) doc["output_dir"] = s.output_dir;
  json roads = json::array();
  for (const auto& r : s.roads) {
    json jr{{"id", r.id}, {"length", r.length}, {"cells", r.cells}};
    if (r.x0) jr["x0"] = *r.x0;
    json segs = json::array();
    for (const auto& seg : r.initial) {
      segs.push_back({{"from", seg.from}, {"to", seg.to}, {"rho", seg.rho}});
    }
    jr["initial"] = segs;
    if (r.left_ghost) jr["left_ghost"] = *r.left_ghost;
    if (r.right_ghost) jr["right_ghost"] = *r.right_ghost;
    roads.push_back(jr);
  }
  doc["roads"] = roads;
  json junctions = json::array();
  for (const auto& j : s.junctions) {
    junctions.push_back({{"id", j.id},
                         {"incoming", j.incoming},
                         {"outgoing", j.outgoing},
                         {"A", j.distribution},
                         {"P", j.priorities}});
  }
  doc["junctions"] = junctions;
  return doc;
}

Scenario from_json(const json& doc) {
  if (!doc.is_object()) fail("document", "expected a JSON object");
  const json& body = doc.contains("scenario") ? doc["scenario"] : doc;
  Scenario s;
  if (body.contains("name")) s.name = as_string(body["name"], "name");
  if (body.contains("flux")) s.flux = parse_flux(body["flux"]);
  if (body.contains("solver")) {
    s.solver = parse_solver_kind(as_string(body["solver"], "solver"));
  }
  s.final_time = as_number(require(body, "T", "document"), "T");
  if (body.contains("cfl")) s.cfl_safety = as_number(body["cfl"], "cfl");
  if (body.contains("sample_times")) s.sample_times = as_numbers(body["sample_times"], "sample_times");
  if (body.contains("output_dir")) s.output_dir = as_string(body["output_dir"], "output_dir");
  const json& roads = require(body, "roads", "document");
  if (!roads.is_array()) fail("roads", "expected an array");
  for (std::size_t k = 0; k < roads.size(); ++k) {
    s.roads.push_back(parse_road(roads[k], "roads[" + std::to_string(k) + "]"));
  }
  if (body.contains("junctions")) {
    const json& js = body["junctions"];
    if (!js.is_array()) fail("junctions", "expected an array");
    for (std::size_t k = 0; k < js.size(); ++k) {
      s.junctions.push_back(parse_junction(js[k], "junctions[" + std::to_string(k) + "]"));
    }
  }
  return s;
}

struct EndOwners {
  // road index -> (junction index, slot)
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> right;
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> left;
};

EndOwners resolve_attachments(const Scenario& s) {
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < s.roads.size(); ++r) index[s.roads[r].id] = r;
  EndOwners owners;
  for (std::size_t k = 0; k < s.junctions.size(); ++k) {
    const auto& j = s.junctions[k];
    const std::string where = "junctions[" + std::to_string(k) + "] (junction '" + j.id + "')";
    std::set<std::string> seen;
    auto attach = [&](const std::string& id, std::size_t slot, bool incoming) {
      const auto it = index.find(id);
      if (it == index.end()) fail(where, "unknown road '" + id + "'");
      if (!seen.insert(id).second) fail(where, "road '" + id + "' listed twice");
      auto& table = incoming ? owners.right : owners.left;
      if (table.count(it->second)) {
        fail(where, "road '" + id + "' " + (incoming ? "right" : "left") +
                        " end is already attached to junction '" +
                        s.junctions[table[it->second].first].id + "'");
      }
      const auto& road = s.roads[it->second];
      if (incoming ? road.right_ghost.has_value() : road.left_ghost.has_value()) {
        fail(where, "road '" + id + "' " + (incoming ? "right" : "left") +
                        " end has a boundary ghost and a junction attachment");
      }
      table[it->second] = {k, slot};
    };
    for (std::size_t i = 0; i < j.incoming.size(); ++i) attach(j.incoming[i], i, true);
    for (std::size_t o = 0; o < j.outgoing.size(); ++o) {
      attach(j.outgoing[o], j.incoming.size() + o, false);
    }
  }
  return owners;
}

void check_density(double rho, const std::string& where) {
  if (!(rho >= 0.0 && rho <= 1.0)) fail(where, "density must lie in [0, 1]");
}

}  // namespace

void validate_scenario(const Scenario& s) {
  if (!(s.final_time >= 0.0) || !std::isfinite(s.final_time)) fail("T", "must be a finite time >= 0");
  if (!(s.cfl_safety > 0.0 && s.cfl_safety <= 1.0)) fail("cfl", "must lie in (0, 1]");
  for (std::size_t k = 0; k < s.sample_times.size(); ++k) {
    const double t = s.sample_times[k];
    if (!(t >= 0.0 && t <= s.final_time)) {
      fail("sample_times[" + std::to_string(k) + "]", "must lie in [0, T]");
    }
  }
  if (s.roads.empty()) fail("roads", "at least one road is required");

  std::set<std::string> ids;
  for (std::size_t r = 0; r < s.roads.size(); ++r) {
    const auto& road = s.roads[r];
    const std::string where = "roads[" + std::to_string(r) + "] (road '" + road.id + "')";
    if (road.id.empty()) fail(where, "empty road id");
    if (!ids.insert(road.id).second) fail(where, "duplicate road id");
    if (!(road.length > 0.0)) fail(where + ".length", "must be positive");
    if (road.cells < 2) fail(where + ".cells", "must be >= 2");
    if (road.initial.empty()) fail(where + ".initial", "no initial data");
    double cursor = 0.0;
    for (std::size_t k = 0; k < road.initial.size(); ++k) {
      const auto& seg = road.initial[k];
      const std::string sw = where + ".initial[" + std::to_string(k) + "]";
      if (std::abs(seg.from - cursor) > kCoverTol * road.length) {
        fail(sw, "segments must be contiguous and start at 0");
      }
      if (!(seg.to > seg.from)) fail(sw, "segment must have positive length");
      check_density(seg.rho, sw + ".rho");
      cursor = seg.to;
    }
    if (std::abs(cursor - road.length) > kCoverTol * road.length) {
      fail(where + ".initial", "segments must cover the whole road");
    }
    if (road.left_ghost) check_density(*road.left_ghost, where + ".left_ghost");
    if (road.right_ghost) check_density(*road.right_ghost, where + ".right_ghost");
  }

  std::set<std::string> jids;
  for (std::size_t k = 0; k < s.junctions.size(); ++k) {
    const auto& j = s.junctions[k];
    const std::string where = "junctions[" + std::to_string(k) + "] (junction '" + j.id + "')";
    if (!jids.insert(j.id).second) fail(where, "duplicate junction id");
    if (j.incoming.empty() || j.outgoing.empty()) {
      fail(where, "needs at least one incoming and one outgoing road");
    }
    if (j.distribution.size() != j.outgoing.size()) {
      fail(where + ".A", "has " + std::to_string(j.distribution.size()) +
                             " rows, expected one per outgoing road (" +
                             std::to_string(j.outgoing.size()) + ")");
    }
    if (j.priorities.size() != j.incoming.size()) {
      fail(where + ".P", "has " + std::to_string(j.priorities.size()) +
                             " entries, expected one per incoming road (" +
                             std::to_string(j.incoming.size()) + ")");
    }
    try {
      const JunctionSpec spec(j.distribution, j.priorities);
      if (s.solver == SolverKind::MaxFlux && spec.n() > spec.m()) {
        throw UnsupportedJunctionError(
            where + ": the maxflux baseline cannot handle a junction with more incoming (" +
            std::to_string(spec.n()) + ") than outgoing (" + std::to_string(spec.m()) +
            ") roads");
      }
    } catch (const SpecError& e) {
      fail(where, e.what());
    }
  }
  resolve_attachments(s);
}

Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("malformed scenario document: ") + e.what());
  }
  Scenario s = from_json(doc);
  validate_scenario(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path.string() + ": cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
}

std::string serialize_scenario(const Scenario& scenario) { return to_json(scenario).dump(2); }

namespace {

RoadDecl unit_road(std::string id, Density rho, bool incoming) {
  RoadDecl r;
  r.id = std::move(id);
  r.length = 1.0;
  r.cells = 200;
  r.x0 = incoming ? -1.0 : 0.0;
  r.initial.push_back({0.0, 1.0, rho});
  return r;
}

Scenario single_junction_case(std::string name, std::vector<Density> rho0, std::size_t n,
                              std::vector<std::vector<double>> a, std::vector<double> p) {
  Scenario s;
  s.name = std::move(name);
  s.final_time = 1.0;
  s.sample_times = {0.0, 0.25, 0.5, 0.75, 1.0};
  JunctionDecl j;
  j.id = "J";
  for (std::size_t l = 0; l < rho0.size(); ++l) {
    const std::string id = std::to_string(l + 1);
    s.roads.push_back(unit_road(id, rho0[l], l < n));
    (l < n ? j.incoming : j.outgoing).push_back(id);
  }
  j.distribution = std::move(a);
  j.priorities = std::move(p);
  s.junctions.push_back(std::move(j));
  return s;
}

}  // namespace

std::vector<std::string> builtin_names() { return {"case1", "case2", "case3"}; }

Scenario builtin_scenario(std::string_view name) {
  Scenario s;
  if (name == "case1") {
    s = single_junction_case("case1", {0.6, 0.2, 0.85, 0.2}, 2, {{0.6, 0.0}, {0.4, 1.0}},
                             {0.7, 0.3});
  } else if (name == "case2") {
    s = single_junction_case("case2", {0.2, 0.6, 0.3, 0.8}, 2, {{0.5, 0.6}, {0.5, 0.4}},
                             {0.7, 0.3});
  } else if (name == "case3") {
    s = single_junction_case("case3", {0.2, 0.6, 0.3, 0.8, 0.2}, 3,
                             {{0.5, 0.6, 0.2}, {0.5, 0.4, 0.8}}, {0.5, 0.3, 0.2});
  } else {
    throw ScenarioError("unknown built-in scenario '" + std::string(name) +
                        "' (expected case1, case2 or case3)");
  }
  validate_scenario(s);
  return s;
}

void apply_dx(Scenario& scenario, double dx) {
  if (!(dx > 0.0)) throw ScenarioError("dx must be positive");
  for (auto& road : scenario.roads) {
    const double count = road.length / dx;
    const auto cells = static_cast<std::size_t>(std::llround(count));
    if (cells < 2 || std::abs(count - static_cast<double>(cells)) > 1e-9 * std::max(1.0, count)) {
      throw ScenarioError("dx does not divide road '" + road.id + "' into at least 2 whole cells");
    }
    road.cells = cells;
  }
}

std::vector<Density> initial_cell_averages(const RoadDecl& road) {
  const double dx = road.dx();
  std::vector<Density> avg(road.cells, 0.0);
  for (std::size_t k = 0; k < road.cells; ++k) {
    const double a = static_cast<double>(k) * dx;
    const double b = k + 1 == road.cells ? road.length : static_cast<double>(k + 1) * dx;
    double acc = 0.0;
    for (const auto& seg : road.initial) {
      const double lo = std::max(a, seg.from);
      const double hi = std::min(b, seg.to);
      if (hi > lo) acc += (hi - lo) * seg.rho;
    }
    // Single-segment cells reproduce the datum exactly.
    const auto covering = std::find_if(road.initial.begin(), road.initial.end(),
                                       [&](const InitialSegment& s) {
                                         return s.from <= a && s.to >= b;
                                       });
    avg[k] = covering != road.initial.end() ? covering->rho : std::clamp(acc / (b - a), 0.0, 1.0);
  }
  return avg;
}

Network build_network(const Scenario& s) {
  validate_scenario(s);
  const auto owners = resolve_attachments(s);
  Network net;
  net.model = s.flux;
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < s.roads.size(); ++r) index[s.roads[r].id] = r;

  for (std::size_t r = 0; r < s.roads.size(); ++r) {
    const auto& decl = s.roads[r];
    RoadGrid road;
    road.id = decl.id;
    road.dx = decl.dx();
    road.rho = initial_cell_averages(decl);
    const bool right_j = owners.right.count(r) > 0;
    const bool left_j = owners.left.count(r) > 0;
    road.x0 = decl.x0.value_or(right_j && !left_j ? -decl.length : 0.0);
    if (left_j) {
      const auto [jk, slot] = owners.left.at(r);
      road.left = JunctionAttachment{jk, slot};
    } else {
      road.left = DirichletBoundary{decl.left_ghost.value_or(decl.initial.front().rho)};
    }
    if (right_j) {
      const auto [jk, slot] = owners.right.at(r);
      road.right = JunctionAttachment{jk, slot};
    } else {
      road.right = DirichletBoundary{decl.right_ghost.value_or(decl.initial.back().rho)};
    }
    net.roads.push_back(std::move(road));
  }
  for (const auto& j : s.junctions) {
    NetworkJunction nj{j.id, JunctionSpec(j.distribution, j.priorities), {}};
    for (const auto& id : j.incoming) nj.roads.push_back(index.at(id));
    for (const auto& id : j.outgoing) nj.roads.push_back(index.at(id));
    net.junctions.push_back(std::move(nj));
  }
  validate_network(net);
  return net;
}

RunParameters run_parameters(const Scenario& s) {
  return RunParameters{s.solver, s.final_time, s.cfl_safety, s.sample_times};
}

Trajectory run_scenario(const Scenario& scenario) {
  return run(build_network(scenario), run_parameters(scenario));
}

}  // namespace netlwr
