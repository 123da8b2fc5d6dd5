#include "gfusion/factors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gfusion/errors.hpp"

namespace gfusion {

Vector6d local_residual(const Pose& prev, const Pose& curr, const LocalMeasurement& z) {
  const Pose estimated = relative_pose(prev, curr);
  Vector6d r;
  r.head<3>() = z.relative.position - estimated.position;
  r.tail<3>() = quat_boxminus(z.relative.orientation, estimated.orientation);
  return r;
}

Eigen::Vector3d gps_residual(const Pose& x, const GpsMeasurement& z) {
  return z.position - x.position;
}

Eigen::Vector3d mag_residual(const Pose& x, const MagMeasurement& z,
                             const MagReference& ref) {
  const double zn = z.field.norm();
  const double wn = ref.world_field.norm();
  if (!(zn > 0.0) || !(wn > 0.0)) {
    throw DataError("magnetometer measurement rejected: zero-norm field vector");
  }
  return z.field / zn -
         ref.body_to_sensor * (x.orientation.inverse() * (ref.world_field / wn));
}

double baro_residual(const Pose& x, const BaroMeasurement& z) {
  return z.height - x.position.z();
}

Matrix6d unified_local_covariance(const Pose& relative,
                                  const LocalCovariancePolicy& policy) {
  const double st = policy.sigma_trans_abs + policy.sigma_trans_frac * relative.position.norm();
  const double sr = policy.sigma_rot_abs +
                    policy.sigma_rot_frac * relative.orientation.log().norm();
  Vector6d d;
  d << st * st, st * st, st * st, sr * sr, sr * sr, sr * sr;
  return d.asDiagonal();
}

Eigen::Matrix3d gps_covariance(int satellite_count, double base_sigma,
                               int reference_satellites) {
  double scale = 1.0;
  if (satellite_count == 0) {
    scale = 1e3;
  } else if (satellite_count > 0) {
    scale = std::max(1.0, static_cast<double>(reference_satellites) / satellite_count);
  }
  const double s = base_sigma * scale;
  return Eigen::Vector3d(s * s, s * s, 4.0 * s * s).asDiagonal();
}

Eigen::Matrix3d mag_covariance(double measured_norm, double reference_norm,
                               double base_sigma) {
  const double ratio = measured_norm / reference_norm;
  const double m = std::max({1.0, ratio, 1.0 / ratio});
  const double s = base_sigma * m * m;
  return Eigen::Matrix3d::Identity() * (s * s);
}

double baro_variance(std::span<const double> window, double default_variance) {
  if (window.size() < 2) return default_variance;
  const double n = static_cast<double>(window.size());
  const double mean = std::accumulate(window.begin(), window.end(), 0.0) / n;
  double ss = 0.0;
  for (double h : window) ss += (h - mean) * (h - mean);
  return std::max(ss / (n - 1.0), kBaroVarianceFloor);
}

HuberValue huber(double squared_norm, double delta) {
  const double knee = delta * delta;
  if (squared_norm <= knee) return {squared_norm, 1.0};
  const double r = std::sqrt(squared_norm);
  return {2.0 * delta * r - knee, delta / r};
}

const char* to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::kLocal: return "local";
    case FactorKind::kGps: return "gps";
    case FactorKind::kMag: return "mag";
    case FactorKind::kBaro: return "baro";
  }
  return "unknown";
}

Factor::Factor(FactorKind kind, std::array<NodeId, 2> nodes, std::size_t node_count,
               Measurement z, const FactorCovariance& covariance,
               std::optional<double> huber_delta)
    : kind_(kind),
      nodes_(nodes),
      node_count_(node_count),
      measurement_(std::move(z)),
      covariance_(covariance),
      huber_delta_(huber_delta) {
  if (!covariance_.allFinite() || !covariance_.isApprox(covariance_.transpose(), 1e-12)) {
    throw NumericError(std::string(to_string(kind)) + " factor covariance is not symmetric");
  }
  Eigen::LLT<FactorCovariance> llt(covariance_);
  if (llt.info() != Eigen::Success) {
    throw NumericError(std::string(to_string(kind)) +
                       " factor covariance is not positive definite");
  }
  sqrt_covariance_ = llt.matrixL();
  if (huber_delta_ && !(*huber_delta_ > 0.0)) {
    throw ConfigError("huber delta must be positive");
  }
}

Factor Factor::local(NodeId prev, NodeId curr, const LocalMeasurement& z,
                     const Matrix6d& covariance) {
  return Factor(FactorKind::kLocal, {prev, curr}, 2, z, covariance, std::nullopt);
}

Factor Factor::gps(NodeId node, const GpsMeasurement& z, const Eigen::Matrix3d& covariance,
                   std::optional<double> huber_delta) {
  if (!z.position.allFinite()) throw DataError("gps position is not finite");
  return Factor(FactorKind::kGps, {node, node}, 1, z, covariance, huber_delta);
}

Factor Factor::mag(NodeId node, const MagMeasurement& z, const MagReference& ref,
                   const Eigen::Matrix3d& covariance) {
  if (!(z.field.norm() > 0.0) || !(ref.world_field.norm() > 0.0)) {
    throw DataError("magnetometer measurement rejected: zero-norm field vector");
  }
  Factor f(FactorKind::kMag, {node, node}, 1, z, covariance, std::nullopt);
  f.mag_reference_ = ref;
  return f;
}

Factor Factor::baro(NodeId node, const BaroMeasurement& z) {
  FactorCovariance c(1, 1);
  c(0, 0) = z.variance;
  return Factor(FactorKind::kBaro, {node, node}, 1, z, c, std::nullopt);
}

bool Factor::binds(NodeId id) const {
  return std::find(nodes().begin(), nodes().end(), id) != nodes().end();
}

ResidualVector Factor::residual(std::span<const Pose> states) const {
  switch (kind_) {
    case FactorKind::kLocal:
      return local_residual(states[0], states[1], measurement<LocalMeasurement>());
    case FactorKind::kGps:
      return gps_residual(states[0], measurement<GpsMeasurement>());
    case FactorKind::kMag:
      return mag_residual(states[0], measurement<MagMeasurement>(), mag_reference_);
    case FactorKind::kBaro: {
      ResidualVector r(1);
      r[0] = baro_residual(states[0], measurement<BaroMeasurement>());
      return r;
    }
  }
  return {};
}

Linearization Factor::linearize(std::span<const Pose> states) const {
  Linearization out;
  out.residual = residual(states);
  out.jacobian = FactorJacobian::Zero(dimension(), 6 * static_cast<int>(node_count_));
  auto& jac = out.jacobian;

  switch (kind_) {
    case FactorKind::kLocal: {
      const Pose& xi = states[0];
      const Pose& xj = states[1];
      const Eigen::Matrix3d rit = xi.orientation.matrix().transpose();
      const Eigen::Vector3d v = rit * (xj.position - xi.position);
      const Eigen::Vector3d rq = out.residual.tail<3>();
      const Eigen::Matrix3d rz =
          measurement<LocalMeasurement>().relative.orientation.matrix();
      jac.block<3, 3>(0, 0) = rit;
      jac.block<3, 3>(0, 3) = -skew(v);
      jac.block<3, 3>(0, 6) = -rit;
      jac.block<3, 3>(3, 3) = right_jacobian_inverse(rq) * rz.transpose();
      jac.block<3, 3>(3, 9) = -left_jacobian_inverse(rq);
      break;
    }
    case FactorKind::kGps:
      jac.block<3, 3>(0, 0) = -Eigen::Matrix3d::Identity();
      break;
    case FactorKind::kMag: {
      const Eigen::Vector3d zw = mag_reference_.world_field.normalized();
      const Eigen::Vector3d v = states[0].orientation.inverse() * zw;
      jac.block<3, 3>(0, 3) = -mag_reference_.body_to_sensor.matrix() * skew(v);
      break;
    }
    case FactorKind::kBaro:
      jac(0, 2) = -1.0;
      break;
  }
  return out;
}

ResidualVector Factor::whiten(const ResidualVector& r) const {
  return sqrt_covariance_.triangularView<Eigen::Lower>().solve(r);
}

FactorJacobian Factor::whiten(const FactorJacobian& j) const {
  return sqrt_covariance_.triangularView<Eigen::Lower>().solve(j);
}

}  // namespace gfusion
