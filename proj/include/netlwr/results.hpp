#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "netlwr/godunov.hpp"
#include "netlwr/scenario.hpp"

namespace netlwr {

inline constexpr const char* kVersion = "0.1.0";

/// Writes road_<id>.csv (t,x,rho) when samples exist, junction_<id>.csv
/// (t,dt,Gamma,hbar,q_<road>...) with one row per step, and manifest.json.
/// Each file is written to a temporary name and renamed into place.
/// Returns the paths written. Throws IoError naming the failing path.
std::vector<std::filesystem::path> write_results(const Trajectory& trajectory,
                                                 const Scenario& scenario,
                                                 const std::filesystem::path& dir);

/// Atomic text write (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace netlwr
