#include "gfusion/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gfusion/errors.hpp"

namespace gfusion {
namespace {

constexpr double kPi = std::numbers::pi;

// Independent stream per generator so enabling one sensor never changes
// another sensor's noise.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct PathPoint {
  Eigen::Vector3d position;
  double yaw;
};

PathPoint circle_point(double s, double radius, double direction) {
  const double a = s / radius;
  return {{radius * std::sin(a), direction * radius * (1.0 - std::cos(a)), 0.0},
          direction * a};
}

std::size_t subsample_stride(const Trajectory& truth, double rate) {
  if (truth.size() < 2) return 1;
  const double truth_rate =
      static_cast<double>(truth.size() - 1) / (truth.back().timestamp - truth.front().timestamp);
  if (!(rate > 0.0) || rate > truth_rate * (1.0 + 1e-9)) {
    throw ConfigError("sensor rate must be positive and not exceed the trajectory rate");
  }
  return static_cast<std::size_t>(std::max(1.0, std::round(truth_rate / rate)));
}

}  // namespace

const char* to_string(Shape shape) {
  switch (shape) {
    case Shape::kCircle: return "circle";
    case Shape::kFigureEight: return "figure8";
    case Shape::kStraight: return "straight";
    case Shape::kHelix: return "helix";
    case Shape::kWaypoints: return "waypoints";
  }
  return "unknown";
}

Shape parse_shape(const std::string& name) {
  if (name == "circle") return Shape::kCircle;
  if (name == "figure8" || name == "figure-eight") return Shape::kFigureEight;
  if (name == "straight") return Shape::kStraight;
  if (name == "helix") return Shape::kHelix;
  if (name == "waypoints") return Shape::kWaypoints;
  throw ConfigError("unknown trajectory shape '" + name + "'");
}

void Scenario::validate() const {
  if (shape == Shape::kWaypoints) {
    if (waypoints.size() < 2) throw ConfigError("waypoint shape needs at least 2 waypoints");
  } else if (!(path_length > 0.0)) {
    throw ConfigError("path length must be positive");
  }
  if (!(speed > 0.0)) throw ConfigError("speed must be positive");
  if (!(rate > 0.0)) throw ConfigError("sample rate must be positive");
  const double noises[] = {drift.sigma_trans_frac, drift.sigma_trans_abs, drift.sigma_yaw,
                           drift.sigma_roll_pitch, gps.sigma, gps.sigma_vertical,
                           gps.outlier_magnitude, mag.sigma, baro.sigma};
  for (double v : noises) {
    if (!(v >= 0.0)) throw ConfigError("noise parameters must be nonnegative");
  }
  if (gps.enabled && !(gps.rate > 0.0)) throw ConfigError("gps rate must be positive");
  if (mag.enabled && !(mag.rate > 0.0)) throw ConfigError("mag rate must be positive");
  if (baro.enabled && !(baro.rate > 0.0)) throw ConfigError("baro rate must be positive");
  if (!(gps.dropout >= 0.0 && gps.dropout <= 1.0) ||
      !(gps.outlier_fraction >= 0.0 && gps.outlier_fraction <= 1.0)) {
    throw ConfigError("probabilities must lie in [0, 1]");
  }
  if (!(gps.correlation >= 0.0 && gps.correlation < 1.0)) {
    throw ConfigError("gps correlation must lie in [0, 1)");
  }
  if (gps.satellites_min < 0 || gps.satellites_max < gps.satellites_min) {
    throw ConfigError("invalid satellite count range");
  }
  if (mag.enabled && !(mag.reference.world_field.norm() > 0.0)) {
    throw ConfigError("magnetic reference field must be nonzero");
  }
}

Trajectory generate_truth(const Scenario& scenario) {
  scenario.validate();

  std::vector<double> cumulative;  // waypoint arc lengths
  double length = scenario.path_length;
  if (scenario.shape == Shape::kWaypoints) {
    cumulative.push_back(0.0);
    for (std::size_t i = 1; i < scenario.waypoints.size(); ++i) {
      cumulative.push_back(cumulative.back() +
                           (scenario.waypoints[i] - scenario.waypoints[i - 1]).norm());
    }
    length = cumulative.back();
    if (!(length > 0.0)) throw ConfigError("waypoints span zero length");
  }

  const auto at = [&](double s) -> PathPoint {
    switch (scenario.shape) {
      case Shape::kStraight:
        return {{s, 0.0, 0.0}, 0.0};
      case Shape::kCircle:
        return circle_point(s, length / (2.0 * kPi), 1.0);
      case Shape::kHelix: {
        PathPoint p = circle_point(s, length / (2.0 * kPi), 1.0);
        p.position.z() = scenario.helix_rise * s / length;
        return p;
      }
      case Shape::kFigureEight: {
        const double radius = length / (4.0 * kPi);
        if (s < 0.5 * length) return circle_point(s, radius, 1.0);
        return circle_point(s - 0.5 * length, radius, -1.0);
      }
      case Shape::kWaypoints: {
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
        std::size_t seg = static_cast<std::size_t>(it - cumulative.begin());
        seg = std::clamp<std::size_t>(seg, 1, cumulative.size() - 1);
        const Eigen::Vector3d& a = scenario.waypoints[seg - 1];
        const Eigen::Vector3d& b = scenario.waypoints[seg];
        const double span = cumulative[seg] - cumulative[seg - 1];
        const double u = span > 0.0 ? (s - cumulative[seg - 1]) / span : 0.0;
        // heading of the segment; purely vertical segments keep yaw 0
        const Eigen::Vector3d d = b - a;
        const double yaw = std::hypot(d.x(), d.y()) > 0.0 ? std::atan2(d.y(), d.x()) : 0.0;
        return {a + u * d, yaw};
      }
    }
    return {Eigen::Vector3d::Zero(), 0.0};
  };

  const double duration = length / scenario.speed;
  const auto steps = static_cast<std::size_t>(std::floor(duration * scenario.rate + 1e-9));
  Trajectory truth;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) / scenario.rate;
    const double s = std::min(scenario.speed * t, length);
    const PathPoint p = at(s);
    truth.push_back(t, {p.position, UnitQuaternion::from_yaw(p.yaw)});
  }
  return truth;
}

Trajectory generate_odometry(const Trajectory& truth, const OdometryDrift& drift,
                             std::uint64_t seed) {
  Trajectory odom;
  if (truth.empty()) return odom;
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::normal_distribution<double> normal;

  Pose current = truth.front().pose;
  odom.push_back(truth.front().timestamp, current);
  for (std::size_t k = 1; k < truth.size(); ++k) {
    const double dt = truth[k].timestamp - truth[k - 1].timestamp;
    Pose step = relative_pose(truth[k - 1].pose, truth[k].pose);
    const double sigma_t = drift.sigma_trans_frac * step.position.norm() + drift.sigma_trans_abs;
    Eigen::Vector3d dp, dr;
    for (int i = 0; i < 3; ++i) dp[i] = normal(rng);
    for (int i = 0; i < 3; ++i) dr[i] = normal(rng);
    step.position += sigma_t * dp;
    const Eigen::Vector3d rotation_noise(drift.sigma_roll_pitch * dr.x(),
                                         drift.sigma_roll_pitch * dr.y(),
                                         drift.sigma_yaw * dr.z() + drift.yaw_rate_bias * dt);
    step.orientation = step.orientation * UnitQuaternion::exp(rotation_noise);
    current = current * step;
    odom.push_back(truth[k].timestamp, current);
  }
  return odom;
}

std::vector<GpsMeasurement> generate_gps(const Trajectory& truth, const GpsSimulation& config,
                                         std::uint64_t seed) {
  std::vector<GpsMeasurement> out;
  if (!config.enabled || truth.empty()) return out;
  const std::size_t stride = subsample_stride(truth, config.rate);
  std::mt19937_64 rng(derive_seed(seed, 2));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::uniform_int_distribution<int> satellites(config.satellites_min, config.satellites_max);

  const double rho = config.correlation;
  const double innovation = std::sqrt(1.0 - rho * rho);
  Eigen::Vector3d error = Eigen::Vector3d::Zero();
  bool first = true;
  for (std::size_t k = 0; k < truth.size(); k += stride) {
    Eigen::Vector3d n(normal(rng), normal(rng), normal(rng));
    n.x() *= config.sigma;
    n.y() *= config.sigma;
    n.z() *= config.sigma_vertical;
    error = first ? n : Eigen::Vector3d(rho * error + innovation * n);
    first = false;

    const double drop = uniform(rng);
    const int sats = satellites(rng);
    const double outlier = uniform(rng);
    Eigen::Vector3d direction(normal(rng), normal(rng), normal(rng));

    if (drop < config.dropout) continue;
    GpsMeasurement m;
    m.timestamp = truth[k].timestamp;
    m.satellites = sats;
    m.position = truth[k].pose.position + error;
    if (outlier < config.outlier_fraction && direction.norm() > 0.0) {
      m.position = truth[k].pose.position + config.outlier_magnitude * direction.normalized();
    }
    out.push_back(m);
  }
  return out;
}

std::vector<MagMeasurement> generate_mag(const Trajectory& truth, const MagSimulation& config,
                                         std::uint64_t seed) {
  std::vector<MagMeasurement> out;
  if (!config.enabled || truth.empty()) return out;
  const std::size_t stride = subsample_stride(truth, config.rate);
  std::mt19937_64 rng(derive_seed(seed, 3));
  std::normal_distribution<double> normal;
  const double scale = config.sigma * config.reference.world_field.norm();
  for (std::size_t k = 0; k < truth.size(); k += stride) {
    const Eigen::Vector3d n(normal(rng), normal(rng), normal(rng));
    MagMeasurement m;
    m.timestamp = truth[k].timestamp;
    m.field = config.reference.body_to_sensor *
                  (truth[k].pose.orientation.inverse() * config.reference.world_field) +
              scale * n;
    out.push_back(m);
  }
  return out;
}

std::vector<BaroSample> generate_baro(const Trajectory& truth, const BaroSimulation& config,
                                      std::uint64_t seed) {
  std::vector<BaroSample> out;
  if (!config.enabled || truth.empty()) return out;
  const std::size_t stride = subsample_stride(truth, config.rate);
  std::mt19937_64 rng(derive_seed(seed, 4));
  std::normal_distribution<double> normal;
  const double z0 = truth.front().pose.position.z();
  for (std::size_t k = 0; k < truth.size(); k += stride) {
    const double n = normal(rng);
    out.push_back({truth[k].timestamp, truth[k].pose.position.z() - z0 + config.sigma * n});
  }
  return out;
}

SensorStreams simulate(const Scenario& scenario, std::uint64_t seed) {
  SensorStreams s;
  s.truth = generate_truth(scenario);
  s.odometry = generate_odometry(s.truth, scenario.drift, seed);
  s.gps = generate_gps(s.truth, scenario.gps, seed);
  s.mag = generate_mag(s.truth, scenario.mag, seed);
  s.baro = generate_baro(s.truth, scenario.baro, seed);
  return s;
}

}  // namespace gfusion
