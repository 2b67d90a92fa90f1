#include "netlwr/results.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <numeric>
#include <system_error>

#include "netlwr/errors.hpp"

namespace netlwr {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string() + ": cannot open for writing");
    out << content;
    out.flush();
    if (!out) throw IoError(tmp.string() + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError(path.string() + ": cannot move into place");
  }
}

std::vector<std::filesystem::path> write_results(const Trajectory& tr, const Scenario& scenario,
                                                 const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError(dir.string() + ": cannot create output directory");
  }
  std::vector<std::filesystem::path> written;
  const Network& net = tr.final_state;

  if (!tr.samples.empty()) {
    for (std::size_t r = 0; r < net.roads.size(); ++r) {
      const auto& road = net.roads[r];
      std::string csv = "t,x,rho\n";
      for (const auto& s : tr.samples) {
        for (std::size_t k = 0; k < s.rho[r].size(); ++k) {
          csv += num(s.t) + "," + num(road.cell_center(k)) + "," + num(s.rho[r][k]) + "\n";
        }
      }
      auto path = dir / ("road_" + road.id + ".csv");
      write_file_atomic(path, csv);
      written.push_back(path);
    }
  }

  for (std::size_t k = 0; k < net.junctions.size(); ++k) {
    const auto& jn = net.junctions[k];
    std::string csv = "t,dt,Gamma,hbar";
    for (std::size_t road : jn.roads) csv += ",q_" + net.roads[road].id;
    csv += "\n";
    for (const auto& st : tr.steps) {
      const auto& q = st.junctions[k];
      const double gamma = std::accumulate(q.q_in.begin(), q.q_in.end(), 0.0);
      csv += num(st.t) + "," + num(st.dt) + "," + num(gamma) + "," + num(q.hbar);
      for (double v : q.q_in) csv += "," + num(v);
      for (double v : q.q_out) csv += "," + num(v);
      csv += "\n";
    }
    auto path = dir / ("junction_" + jn.id + ".csv");
    write_file_atomic(path, csv);
    written.push_back(path);
  }

  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["solver"] = std::string(to_string(scenario.solver));
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& road : net.roads) {
    grid.push_back({{"road", road.id}, {"cells", road.cells()}, {"dx", road.dx}, {"x0", road.x0}});
  }
  manifest["grid"] = grid;
  manifest["steps"] = tr.steps.size();
  manifest["scenario"] = nlohmann::json::parse(serialize_scenario(scenario));
  auto path = dir / "manifest.json";
  write_file_atomic(path, manifest.dump(2) + "\n");
  written.push_back(path);
  return written;
}

}  // namespace netlwr
