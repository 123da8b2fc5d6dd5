#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace gfusion {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Hamilton unit quaternion. Construction normalizes and picks the w >= 0
/// representative of the double cover.
class UnitQuaternion {
 public:
  UnitQuaternion() = default;
  UnitQuaternion(double w, double x, double y, double z);
  explicit UnitQuaternion(const Eigen::Quaterniond& q);

  static UnitQuaternion identity() { return {}; }
  /// Exponential map of a rotation vector (axis * angle, radians).
  static UnitQuaternion exp(const Eigen::Vector3d& rotation_vector);
  static UnitQuaternion from_axis_angle(const Eigen::Vector3d& axis, double angle);
  static UnitQuaternion from_yaw(double yaw) {
    return from_axis_angle(Eigen::Vector3d::UnitZ(), yaw);
  }

  /// Rotation vector with norm in [0, pi]. At exactly pi the sign is chosen
  /// so the largest-magnitude axis component is positive.
  Eigen::Vector3d log() const;

  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }
  const Eigen::Quaterniond& eigen() const { return q_; }
  Eigen::Matrix3d matrix() const { return q_.toRotationMatrix(); }

  UnitQuaternion inverse() const { return UnitQuaternion(q_.conjugate()); }
  UnitQuaternion operator*(const UnitQuaternion& rhs) const {
    return UnitQuaternion(q_ * rhs.q_);
  }
  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return q_ * v; }

  /// Yaw of the body x axis in the world frame (ZYX convention).
  double yaw() const;

 private:
  Eigen::Quaterniond q_ = Eigen::Quaterniond::Identity();
};

/// Rigid pose: world-frame position plus orientation (body to world).
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  UnitQuaternion orientation;

  static Pose identity() { return {}; }

  Pose operator*(const Pose& rhs) const {
    return {position + orientation * rhs.position, orientation * rhs.orientation};
  }
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return position + orientation * p;
  }
  Pose inverse() const {
    const UnitQuaternion qi = orientation.inverse();
    return {-(qi * position), qi};
  }
};

/// Local update of a Pose: world-frame translation and body-frame rotation.
struct Tangent6 {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Vector3d rotation = Eigen::Vector3d::Zero();

  static Tangent6 from_vector(const Vector6d& v) {
    return {v.head<3>(), v.tail<3>()};
  }
  Vector6d vector() const {
    Vector6d v;
    v << translation, rotation;
    return v;
  }
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Error-state difference of two rotations: log(b^-1 * a).
Eigen::Vector3d quat_boxminus(const UnitQuaternion& a, const UnitQuaternion& b);

/// Geodesic angle between two rotations, radians in [0, pi].
double rotation_angle(const UnitQuaternion& a, const UnitQuaternion& b);

/// Retraction: position += d.translation, orientation = q * exp(d.rotation).
Pose pose_boxplus(const Pose& x, const Tangent6& d);

/// Pose of b expressed in the frame of a: (q_a^-1 (p_b - p_a), q_a^-1 q_b).
Pose relative_pose(const Pose& a, const Pose& b);

/// Inverse right Jacobian of SO(3): log(exp(phi) exp(d)) ~ phi + Jr^-1(phi) d.
Eigen::Matrix3d right_jacobian_inverse(const Eigen::Vector3d& phi);
/// Inverse left Jacobian of SO(3): log(exp(d) exp(phi)) ~ phi + Jl^-1(phi) d.
Eigen::Matrix3d left_jacobian_inverse(const Eigen::Vector3d& phi);

/// r^T omega^-1 r. Throws NumericError unless omega is symmetric positive
/// definite and dimensions agree.
double mahalanobis_sq(const Eigen::VectorXd& r, const Eigen::MatrixXd& omega);

}  // namespace gfusion
