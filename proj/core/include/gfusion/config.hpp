#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "gfusion/geodesy.hpp"
#include "gfusion/graph.hpp"
#include "gfusion/simulate.hpp"
#include "gfusion/solver.hpp"

namespace gfusion {

/// Settings of one fuse run. Stream paths are resolved against the config
/// file's directory.
struct RunConfig {
  std::filesystem::path odometry;
  std::filesystem::path gps;
  std::filesystem::path mag;
  std::filesystem::path baro;
  bool use_gps = true;
  bool use_mag = true;
  bool use_baro = true;

  GraphOptions graph;
  SolverOptions solver;
  double optimization_period = 1.0;  // s of data time

  std::size_t baro_window = 10;
  double baro_default_variance = 0.25;  // m^2
  double baro_meters_per_pascal = kDefaultMetersPerPascal;
  std::optional<double> baro_reference_pressure;

  /// Throws ConfigError on out-of-range values or missing files.
  void validate() const;
};

/// Parses the flat `key = value` format. Unknown keys are an error.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace gfusion
