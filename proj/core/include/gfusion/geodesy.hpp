#pragma once

#include <Eigen/Core>

namespace gfusion {

/// WGS-84 ellipsoid constants.
namespace wgs84 {
inline constexpr double kSemiMajorAxis = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kSemiMinorAxis = kSemiMajorAxis * (1.0 - kFlattening);
inline constexpr double kEccentricitySq = kFlattening * (2.0 - kFlattening);
}  // namespace wgs84

/// Geodetic coordinate: degrees and meters above the ellipsoid.
struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;
  double altitude = 0.0;
};

/// Throws DomainError unless latitude is in [-90, 90] and longitude in
/// [-180, 180] (and all fields finite).
void validate(const GeoPoint& p);

Eigen::Vector3d lla_to_ecef(const GeoPoint& p);

/// Iterative inverse of lla_to_ecef; converges to sub-micrometer accuracy.
GeoPoint ecef_to_lla(const Eigen::Vector3d& ecef);

/// Local East-North-Up tangent frame anchored at a geodetic origin.
/// Immutable once constructed.
class EnuOrigin {
 public:
  explicit EnuOrigin(const GeoPoint& origin);

  const GeoPoint& origin() const { return origin_; }
  const Eigen::Vector3d& origin_ecef() const { return origin_ecef_; }
  /// Rotation taking ECEF difference vectors into ENU.
  const Eigen::Matrix3d& ecef_to_enu_rotation() const { return rotation_; }

  Eigen::Vector3d ecef_to_enu(const Eigen::Vector3d& ecef) const;
  Eigen::Vector3d enu_to_ecef(const Eigen::Vector3d& enu) const;

 private:
  GeoPoint origin_;
  Eigen::Vector3d origin_ecef_;
  Eigen::Matrix3d rotation_;
};

Eigen::Vector3d lla_to_enu(const GeoPoint& p, const EnuOrigin& origin);
GeoPoint enu_to_lla(const Eigen::Vector3d& enu, const EnuOrigin& origin);

/// Standard-atmosphere slope near sea level: 12.013 Pa per meter.
inline constexpr double kDefaultMetersPerPascal = 1.0 / 12.013;

/// Linear barometric model: height above the level where reference_pressure
/// was observed, h = (p_ref - p) * meters_per_pascal.
double pressure_to_height(double pressure, double reference_pressure,
                          double meters_per_pascal = kDefaultMetersPerPascal);

/// Inverse of pressure_to_height.
double height_to_pressure(double height, double reference_pressure,
                          double meters_per_pascal = kDefaultMetersPerPascal);

}  // namespace gfusion
