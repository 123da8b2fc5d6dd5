#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gfusion/evaluation.hpp"
#include "gfusion/factors.hpp"
#include "gfusion/geodesy.hpp"

namespace gfusion {

enum class Shape { kCircle, kFigureEight, kStraight, kHelix, kWaypoints };

const char* to_string(Shape shape);
Shape parse_shape(const std::string& name);

struct OdometryDrift {
  double sigma_trans_frac = 0.0;  // per-axis translation noise, fraction of step length
  double sigma_trans_abs = 0.0;   // m per step
  double sigma_yaw = 0.0;         // rad per step
  double sigma_roll_pitch = 0.0;  // rad per step
  double yaw_rate_bias = 0.0;     // rad/s
};

struct GpsSimulation {
  bool enabled = true;
  double rate = 1.0;  // Hz
  double sigma = 0.5;
  double sigma_vertical = 0.5;
  double dropout = 0.0;
  int satellites_min = 10;
  int satellites_max = 14;
  double outlier_fraction = 0.0;
  double outlier_magnitude = 50.0;
  /// First-order Gauss-Markov coefficient of the error between fixes; 0 is
  /// white noise.
  double correlation = 0.0;
  bool write_lla = false;
  GeoPoint origin{22.3, 114.2, 10.0};
};

struct MagSimulation {
  bool enabled = false;
  double rate = 10.0;
  double sigma = 0.01;  // in units of the reference field
  MagReference reference;
};

struct BaroSimulation {
  bool enabled = false;
  double rate = 10.0;
  double sigma = 0.3;  // m
  bool write_pressure = false;
  double reference_pressure = 101325.0;
};

struct Scenario {
  Shape shape = Shape::kCircle;
  double path_length = 100.0;  // m, horizontal
  double speed = 1.0;          // m/s
  double rate = 10.0;          // Hz, ground truth and odometry
  double helix_rise = 20.0;    // m over the whole path
  std::vector<Eigen::Vector3d> waypoints;
  OdometryDrift drift;
  GpsSimulation gps;
  MagSimulation mag;
  BaroSimulation baro;

  /// Throws ConfigError on invalid values.
  void validate() const;
};

struct BaroSample {
  double timestamp = 0.0;
  double height = 0.0;  // m relative to the start
};

struct SensorStreams {
  Trajectory truth;
  Trajectory odometry;  // local-frame poses; consecutive relative poses are the noisy increments
  std::vector<GpsMeasurement> gps;
  std::vector<MagMeasurement> mag;
  std::vector<BaroSample> baro;
};

/// Smooth pose sequence starting at the origin heading +x (waypoint shapes
/// start at the first waypoint). Orientation is yaw-only, following the
/// horizontal velocity.
Trajectory generate_truth(const Scenario& scenario);

/// Composes each true step with Gaussian noise and the yaw-rate bias; the
/// result starts at the first true pose.
Trajectory generate_odometry(const Trajectory& truth, const OdometryDrift& drift,
                             std::uint64_t seed);

std::vector<GpsMeasurement> generate_gps(const Trajectory& truth, const GpsSimulation& config,
                                         std::uint64_t seed);
std::vector<MagMeasurement> generate_mag(const Trajectory& truth, const MagSimulation& config,
                                         std::uint64_t seed);
std::vector<BaroSample> generate_baro(const Trajectory& truth, const BaroSimulation& config,
                                      std::uint64_t seed);

SensorStreams simulate(const Scenario& scenario, std::uint64_t seed);

}  // namespace gfusion
