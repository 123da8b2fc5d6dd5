#include "gfusion/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "gfusion/errors.hpp"
#include "gfusion/io.hpp"

namespace gfusion {
namespace {

std::string where(const std::string& key, const KeyValue& kv) {
  return "line " + std::to_string(kv.line) + ": key '" + key + "'";
}

double to_double(const std::string& key, const KeyValue& kv) {
  double v = 0.0;
  const auto& s = kv.value;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError(where(key, kv) + " expects a number, got '" + s + "'");
  }
  return v;
}

long long to_integer(const std::string& key, const KeyValue& kv) {
  long long v = 0;
  const auto& s = kv.value;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(where(key, kv) + " expects an integer, got '" + s + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const KeyValue& kv) {
  const auto& s = kv.value;
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(where(key, kv) + " expects true or false, got '" + s + "'");
}

std::vector<double> to_numbers(const std::string& key, const KeyValue& kv, std::size_t n) {
  std::istringstream in(kv.value);
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(to_double(key, {token, kv.line}));
  if (out.size() != n) {
    throw ConfigError(where(key, kv) + " expects " + std::to_string(n) + " numbers");
  }
  return out;
}

using Setter = std::function<void(const std::string&, const KeyValue&)>;

void apply_keys(const std::map<std::string, KeyValue>& values,
                const std::map<std::string, Setter>& setters) {
  for (const auto& [key, kv] : values) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(where(key, kv) + " is not a known setting");
    it->second(key, kv);
  }
}

std::map<std::string, KeyValue> parse_or_config_error(std::string_view text) {
  try {
    return parse_key_values(text);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

std::string read_config_file(const std::filesystem::path& path) {
  try {
    return read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

Setter number(double& target) {
  return [&target](const std::string& k, const KeyValue& kv) { target = to_double(k, kv); };
}

Setter flag(bool& target) {
  return [&target](const std::string& k, const KeyValue& kv) { target = to_bool(k, kv); };
}

Setter integer(int& target) {
  return [&target](const std::string& k, const KeyValue& kv) {
    target = static_cast<int>(to_integer(k, kv));
  };
}

Setter count(std::size_t& target) {
  return [&target](const std::string& k, const KeyValue& kv) {
    const auto v = to_integer(k, kv);
    if (v < 0) throw ConfigError(where(k, kv) + " must be nonnegative");
    target = static_cast<std::size_t>(v);
  };
}

Setter vector3(Eigen::Vector3d& target) {
  return [&target](const std::string& k, const KeyValue& kv) {
    const auto v = to_numbers(k, kv, 3);
    target = {v[0], v[1], v[2]};
  };
}

Setter quaternion(UnitQuaternion& target) {
  return [&target](const std::string& k, const KeyValue& kv) {
    const auto v = to_numbers(k, kv, 4);
    try {
      target = UnitQuaternion(v[0], v[1], v[2], v[3]);
    } catch (const DomainError&) {
      throw ConfigError(where(k, kv) + " is not a valid quaternion");
    }
  };
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void RunConfig::validate() const {
  require(!odometry.empty(), "config: 'odometry' input is required");
  require(std::filesystem::exists(odometry), "config: odometry file not found: " + odometry.string());
  const auto check_optional = [](bool use, const std::filesystem::path& p, const char* name) {
    if (use && !p.empty() && !std::filesystem::exists(p)) {
      throw ConfigError(std::string("config: ") + name + " file not found: " + p.string());
    }
  };
  check_optional(use_gps, gps, "gps");
  check_optional(use_mag, mag, "mag");
  check_optional(use_baro, baro, "baro");
  require(graph.keyframe_interval >= 0.0, "config: keyframe_interval must be >= 0");
  require(graph.window_capacity >= 2, "config: window_capacity must be >= 2");
  require(graph.association_tolerance > 0.0, "config: association_tolerance must be > 0");
  require(optimization_period > 0.0, "config: optimization_period must be > 0");
  const auto& p = graph.local_policy;
  require(p.sigma_trans_abs >= 0 && p.sigma_trans_frac >= 0 && p.sigma_rot_abs >= 0 &&
              p.sigma_rot_frac >= 0,
          "config: odometry sigmas must be >= 0");
  require(p.sigma_trans_abs > 0 && p.sigma_rot_abs > 0,
          "config: odom_sigma_trans_abs and odom_sigma_rot_abs must be > 0");
  require(graph.gps_base_sigma > 0.0, "config: gps_base_sigma must be > 0");
  require(graph.gps_reference_satellites > 0, "config: gps_reference_satellites must be > 0");
  require(!graph.gps_huber_delta || *graph.gps_huber_delta > 0.0,
          "config: gps_huber_delta must be > 0");
  require(graph.mag_base_sigma > 0.0, "config: mag_base_sigma must be > 0");
  require(graph.mag_reference.world_field.norm() > 0.0, "config: mag_reference must be nonzero");
  require(baro_window >= 1, "config: baro_window must be >= 1");
  require(baro_default_variance > 0.0, "config: baro_default_variance must be > 0");
  require(baro_meters_per_pascal > 0.0, "config: baro_meters_per_pascal must be > 0");
  require(!baro_reference_pressure || *baro_reference_pressure > 0.0,
          "config: baro_reference_pressure must be > 0");
  solver.validate();
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig c;
  const auto path = [&base_dir](std::filesystem::path& target) -> Setter {
    return [&target, &base_dir](const std::string& k, const KeyValue& kv) {
      if (kv.value.empty()) throw ConfigError(where(k, kv) + " expects a path");
      std::filesystem::path p(kv.value);
      target = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
  };
  bool huber = true;
  double huber_delta = c.graph.gps_huber_delta.value_or(1.0);
  double keyframe = c.graph.keyframe_interval;
  std::size_t capacity = c.graph.window_capacity;
  std::string jacobians = "analytic";

  const std::map<std::string, Setter> setters = {
      {"odometry", path(c.odometry)},
      {"gps", path(c.gps)},
      {"mag", path(c.mag)},
      {"baro", path(c.baro)},
      {"use_gps", flag(c.use_gps)},
      {"use_mag", flag(c.use_mag)},
      {"use_baro", flag(c.use_baro)},
      {"keyframe_interval", number(keyframe)},
      {"window_capacity", count(capacity)},
      {"association_tolerance", number(c.graph.association_tolerance)},
      {"optimization_period", number(c.optimization_period)},
      {"odom_sigma_trans_abs", number(c.graph.local_policy.sigma_trans_abs)},
      {"odom_sigma_trans_frac", number(c.graph.local_policy.sigma_trans_frac)},
      {"odom_sigma_rot_abs", number(c.graph.local_policy.sigma_rot_abs)},
      {"odom_sigma_rot_frac", number(c.graph.local_policy.sigma_rot_frac)},
      {"gps_base_sigma", number(c.graph.gps_base_sigma)},
      {"gps_reference_satellites", integer(c.graph.gps_reference_satellites)},
      {"gps_huber", flag(huber)},
      {"gps_huber_delta", number(huber_delta)},
      {"mag_reference", vector3(c.graph.mag_reference.world_field)},
      {"mag_extrinsic", quaternion(c.graph.mag_reference.body_to_sensor)},
      {"mag_base_sigma", number(c.graph.mag_base_sigma)},
      {"baro_window", count(c.baro_window)},
      {"baro_default_variance", number(c.baro_default_variance)},
      {"baro_meters_per_pascal", number(c.baro_meters_per_pascal)},
      {"baro_reference_pressure",
       [&c](const std::string& k, const KeyValue& kv) {
         c.baro_reference_pressure = to_double(k, kv);
       }},
      {"solver_max_iterations", integer(c.solver.max_iterations)},
      {"solver_cost_tolerance", number(c.solver.cost_tolerance)},
      {"solver_gradient_tolerance", number(c.solver.gradient_tolerance)},
      {"solver_initial_damping", number(c.solver.initial_damping)},
      {"solver_jacobians",
       [&jacobians](const std::string& k, const KeyValue& kv) {
         if (kv.value != "analytic" && kv.value != "numeric") {
           throw ConfigError(where(k, kv) + " expects analytic or numeric");
         }
         jacobians = kv.value;
       }},
  };
  apply_keys(parse_or_config_error(text), setters);

  c.graph.keyframe_interval = keyframe;
  c.graph.window_capacity = capacity;
  if (huber) {
    c.graph.gps_huber_delta = huber_delta;
  } else {
    c.graph.gps_huber_delta.reset();
  }
  c.solver.jacobian_mode = jacobians == "numeric" ? JacobianMode::kNumeric : JacobianMode::kAnalytic;
  if (huber && !(huber_delta > 0.0)) throw ConfigError("config: gps_huber_delta must be > 0");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string text = read_config_file(path);
  RunConfig c = parse_run_config(text, path.parent_path());
  c.validate();
  return c;
}

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  const std::map<std::string, Setter> setters = {
      {"shape",
       [&s](const std::string&, const KeyValue& kv) { s.shape = parse_shape(kv.value); }},
      {"path_length", number(s.path_length)},
      {"speed", number(s.speed)},
      {"rate", number(s.rate)},
      {"helix_rise", number(s.helix_rise)},
      {"waypoints",
       [&s](const std::string& k, const KeyValue& kv) {
         s.waypoints.clear();
         std::istringstream in(kv.value);
         std::string item;
         while (std::getline(in, item, ';')) {
           const auto v = to_numbers(k, {item, kv.line}, 3);
           s.waypoints.emplace_back(v[0], v[1], v[2]);
         }
       }},
      {"odom_sigma_trans_frac", number(s.drift.sigma_trans_frac)},
      {"odom_sigma_trans_abs", number(s.drift.sigma_trans_abs)},
      {"odom_sigma_yaw", number(s.drift.sigma_yaw)},
      {"odom_sigma_roll_pitch", number(s.drift.sigma_roll_pitch)},
      {"odom_yaw_rate_bias", number(s.drift.yaw_rate_bias)},
      {"gps_enabled", flag(s.gps.enabled)},
      {"gps_rate", number(s.gps.rate)},
      {"gps_sigma", number(s.gps.sigma)},
      {"gps_sigma_vertical", number(s.gps.sigma_vertical)},
      {"gps_dropout", number(s.gps.dropout)},
      {"gps_satellites_min", integer(s.gps.satellites_min)},
      {"gps_satellites_max", integer(s.gps.satellites_max)},
      {"gps_outlier_fraction", number(s.gps.outlier_fraction)},
      {"gps_outlier_magnitude", number(s.gps.outlier_magnitude)},
      {"gps_correlation", number(s.gps.correlation)},
      {"gps_write_lla", flag(s.gps.write_lla)},
      {"gps_origin",
       [&s](const std::string& k, const KeyValue& kv) {
         const auto v = to_numbers(k, kv, 3);
         s.gps.origin = {v[0], v[1], v[2]};
       }},
      {"mag_enabled", flag(s.mag.enabled)},
      {"mag_rate", number(s.mag.rate)},
      {"mag_sigma", number(s.mag.sigma)},
      {"mag_reference", vector3(s.mag.reference.world_field)},
      {"mag_extrinsic", quaternion(s.mag.reference.body_to_sensor)},
      {"baro_enabled", flag(s.baro.enabled)},
      {"baro_rate", number(s.baro.rate)},
      {"baro_sigma", number(s.baro.sigma)},
      {"baro_write_pressure", flag(s.baro.write_pressure)},
      {"baro_reference_pressure", number(s.baro.reference_pressure)},
  };
  apply_keys(parse_or_config_error(text), setters);
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_config_file(path));
}

}  // namespace gfusion
