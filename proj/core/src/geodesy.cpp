#include "gfusion/geodesy.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gfusion/errors.hpp"

namespace gfusion {
namespace {

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

double prime_vertical_radius(double sin_lat) {
  return wgs84::kSemiMajorAxis /
         std::sqrt(1.0 - wgs84::kEccentricitySq * sin_lat * sin_lat);
}

}  // namespace

void validate(const GeoPoint& p) {
  if (!std::isfinite(p.latitude) || !std::isfinite(p.longitude) ||
      !std::isfinite(p.altitude)) {
    throw DomainError("geodetic coordinate is not finite");
  }
  if (p.latitude < -90.0 || p.latitude > 90.0) {
    throw DomainError("latitude out of range: " + std::to_string(p.latitude));
  }
  if (p.longitude < -180.0 || p.longitude > 180.0) {
    throw DomainError("longitude out of range: " + std::to_string(p.longitude));
  }
}

Eigen::Vector3d lla_to_ecef(const GeoPoint& p) {
  validate(p);
  const double lat = deg2rad(p.latitude);
  const double lon = deg2rad(p.longitude);
  const double sin_lat = std::sin(lat);
  const double cos_lat = std::cos(lat);
  const double n = prime_vertical_radius(sin_lat);
  return {(n + p.altitude) * cos_lat * std::cos(lon),
          (n + p.altitude) * cos_lat * std::sin(lon),
          (n * (1.0 - wgs84::kEccentricitySq) + p.altitude) * sin_lat};
}

GeoPoint ecef_to_lla(const Eigen::Vector3d& ecef) {
  const double x = ecef.x(), y = ecef.y(), z = ecef.z();
  const double p = std::hypot(x, y);
  const double e2 = wgs84::kEccentricitySq;

  double lat = std::atan2(z, p * (1.0 - e2));
  double h = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double s = std::sin(lat);
    const double c = std::cos(lat);
    const double n = prime_vertical_radius(s);
    h = p * c + z * s - wgs84::kSemiMajorAxis * wgs84::kSemiMajorAxis / n;
    lat = std::atan2(z, p * (1.0 - e2 * n / (n + h)));
  }
  const double lon = (p == 0.0) ? 0.0 : std::atan2(y, x);
  return {rad2deg(lat), rad2deg(lon), h};
}

EnuOrigin::EnuOrigin(const GeoPoint& origin)
    : origin_(origin), origin_ecef_(lla_to_ecef(origin)) {
  const double lat = deg2rad(origin.latitude);
  const double lon = deg2rad(origin.longitude);
  const double sl = std::sin(lat), cl = std::cos(lat);
  const double so = std::sin(lon), co = std::cos(lon);
  rotation_ << -so, co, 0.0,
               -sl * co, -sl * so, cl,
                cl * co, cl * so, sl;
}

Eigen::Vector3d EnuOrigin::ecef_to_enu(const Eigen::Vector3d& ecef) const {
  return rotation_ * (ecef - origin_ecef_);
}

Eigen::Vector3d EnuOrigin::enu_to_ecef(const Eigen::Vector3d& enu) const {
  return rotation_.transpose() * enu + origin_ecef_;
}

Eigen::Vector3d lla_to_enu(const GeoPoint& p, const EnuOrigin& origin) {
  return origin.ecef_to_enu(lla_to_ecef(p));
}

GeoPoint enu_to_lla(const Eigen::Vector3d& enu, const EnuOrigin& origin) {
  return ecef_to_lla(origin.enu_to_ecef(enu));
}

double pressure_to_height(double pressure, double reference_pressure,
                          double meters_per_pascal) {
  if (!(pressure > 0.0) || !(reference_pressure > 0.0)) {
    throw DomainError("pressure must be positive");
  }
  return (reference_pressure - pressure) * meters_per_pascal;
}

double height_to_pressure(double height, double reference_pressure,
                          double meters_per_pascal) {
  if (!(reference_pressure > 0.0)) {
    throw DomainError("reference pressure must be positive");
  }
  return reference_pressure - height / meters_per_pascal;
}

}  // namespace gfusion
