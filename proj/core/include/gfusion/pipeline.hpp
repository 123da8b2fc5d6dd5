#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gfusion/config.hpp"
#include "gfusion/evaluation.hpp"
#include "gfusion/factors.hpp"
#include "gfusion/graph.hpp"
#include "gfusion/simulate.hpp"
#include "gfusion/solver.hpp"

namespace gfusion {

struct FusionInputs {
  Trajectory odometry;
  std::vector<GpsMeasurement> gps;  // ENU
  std::optional<GeoPoint> gps_origin;
  std::vector<MagMeasurement> mag;
  std::vector<BaroSample> baro;
};

struct FusionSettings {
  GraphOptions graph;
  SolverOptions solver;
  double optimization_period = 1.0;
  bool use_gps = true;
  bool use_mag = true;
  bool use_baro = true;
  std::size_t baro_window = 10;
  double baro_default_variance = 0.25;
};

FusionSettings fusion_settings(const RunConfig& config);

struct FactorCounts {
  std::size_t local = 0;
  std::size_t gps = 0;
  std::size_t mag = 0;
  std::size_t baro = 0;
};

struct CycleReport {
  int index = 0;
  double data_time = 0.0;
  std::size_t nodes = 0;
  std::size_t trimmed = 0;
  FactorCounts factors;
  bool optimized = false;  // false when every node was fixed
  SolverReport solver;
};

struct FusionResult {
  Trajectory fused;      // optimized keyframe states, oldest first
  Trajectory predicted;  // every odometry sample mapped through the latest transform
  std::vector<CycleReport> cycles;
  MeasurementCounters gps, mag, baro;
  std::vector<std::string> warnings;
};

/// Replays all streams in timestamp order (odometry first on ties), running
/// one optimization cycle whenever data time crosses a period boundary and a
/// final cycle at the end. Throws ConfigError without odometry.
FusionResult run_fusion(const FusionInputs& inputs, const FusionSettings& settings);

/// Deterministic text log: hashes, warnings, cycle reports and counters.
std::string format_run_log(const FusionResult& result, const std::string& config_hash,
                           const std::vector<std::pair<std::string, std::string>>& digests);

}  // namespace gfusion
