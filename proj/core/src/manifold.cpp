#include "gfusion/manifold.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

#include "gfusion/errors.hpp"

namespace gfusion {

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z)
    : UnitQuaternion(Eigen::Quaterniond(w, x, y, z)) {}

UnitQuaternion::UnitQuaternion(const Eigen::Quaterniond& q) : q_(q) {
  const double n = q_.norm();
  if (!std::isfinite(n) || n == 0.0) {
    throw DomainError("quaternion must have finite nonzero norm");
  }
  q_.coeffs() /= n;
  if (q_.w() < 0.0) q_.coeffs() = -q_.coeffs();
}

UnitQuaternion UnitQuaternion::exp(const Eigen::Vector3d& rotation_vector) {
  const double theta = rotation_vector.norm();
  const double half = 0.5 * theta;
  // sin(theta/2)/theta, series below 1e-4.
  const double k = theta < 1e-4 ? 0.5 - theta * theta / 48.0 : std::sin(half) / theta;
  return UnitQuaternion(std::cos(half), k * rotation_vector.x(),
                        k * rotation_vector.y(), k * rotation_vector.z());
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Eigen::Vector3d& axis,
                                               double angle) {
  return exp(axis.normalized() * angle);
}

Eigen::Vector3d UnitQuaternion::log() const {
  const Eigen::Vector3d v = q_.vec();
  const double n = v.norm();
  const double w = q_.w();
  if (w == 0.0) {
    Eigen::Index largest = 0;
    v.cwiseAbs().maxCoeff(&largest);
    const double sign = v[largest] < 0.0 ? -1.0 : 1.0;
    return sign * std::numbers::pi * v / n;
  }
  if (n < 1e-6) {
    return (2.0 / w - 2.0 * n * n / (3.0 * w * w * w)) * v;
  }
  return (2.0 * std::atan2(n, w) / n) * v;
}

double UnitQuaternion::yaw() const {
  const Eigen::Matrix3d r = matrix();
  return std::atan2(r(1, 0), r(0, 0));
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Vector3d quat_boxminus(const UnitQuaternion& a, const UnitQuaternion& b) {
  return (b.inverse() * a).log();
}

double rotation_angle(const UnitQuaternion& a, const UnitQuaternion& b) {
  return quat_boxminus(a, b).norm();
}

Pose pose_boxplus(const Pose& x, const Tangent6& d) {
  return {x.position + d.translation,
          x.orientation * UnitQuaternion::exp(d.rotation)};
}

Pose relative_pose(const Pose& a, const Pose& b) {
  const UnitQuaternion qi = a.orientation.inverse();
  return {qi * (b.position - a.position), qi * b.orientation};
}

Eigen::Matrix3d right_jacobian_inverse(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d s = skew(phi);
  double c;
  if (theta < 1e-4) {
    c = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    c = 1.0 / (theta * theta) -
        (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Eigen::Matrix3d::Identity() + 0.5 * s + c * s * s;
}

Eigen::Matrix3d left_jacobian_inverse(const Eigen::Vector3d& phi) {
  return right_jacobian_inverse(-phi);
}

double mahalanobis_sq(const Eigen::VectorXd& r, const Eigen::MatrixXd& omega) {
  if (omega.rows() != r.size() || omega.cols() != r.size()) {
    throw NumericError("covariance dimension does not match residual");
  }
  if (!omega.isApprox(omega.transpose(), 1e-12)) {
    throw NumericError("covariance is not symmetric");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success) {
    throw NumericError("covariance is not positive definite");
  }
  return llt.matrixL().solve(r).squaredNorm();
}

}  // namespace gfusion
