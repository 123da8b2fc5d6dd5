#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "gfusion/manifold.hpp"

namespace gfusion {

using NodeId = std::int64_t;

// Residual vectors and Jacobians never exceed 6 rows / 12 columns, so the
// storage is inline.
using ResidualVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;
using FactorJacobian =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 12>;
using FactorCovariance =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;

// ---------------------------------------------------------------------------
// Measurements

/// Relative motion from frame t-1 to frame t reported by the odometry source.
struct LocalMeasurement {
  Pose relative;
};

/// Position in the ENU world frame. satellites < 0 means unknown.
struct GpsMeasurement {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  int satellites = -1;
  double timestamp = 0.0;
};

struct MagMeasurement {
  Eigen::Vector3d field = Eigen::Vector3d::Zero();
  double timestamp = 0.0;
};

/// World magnetic field (ENU) and the body-to-magnetometer rotation.
struct MagReference {
  Eigen::Vector3d world_field = Eigen::Vector3d::UnitY();
  UnitQuaternion body_to_sensor;
};

/// Height relative to the barometer reference, with its variance in m^2.
struct BaroMeasurement {
  double height = 0.0;
  double variance = 1.0;
  double timestamp = 0.0;
};

// ---------------------------------------------------------------------------
// Residuals (measurement minus prediction)

Vector6d local_residual(const Pose& prev, const Pose& curr, const LocalMeasurement& z);
Eigen::Vector3d gps_residual(const Pose& x, const GpsMeasurement& z);
/// Throws DataError when either vector has zero norm.
Eigen::Vector3d mag_residual(const Pose& x, const MagMeasurement& z,
                             const MagReference& ref);
double baro_residual(const Pose& x, const BaroMeasurement& z);

// ---------------------------------------------------------------------------
// Covariance policies

struct LocalCovariancePolicy {
  double sigma_trans_abs = 0.01;   // m
  double sigma_trans_frac = 0.01;  // of step length
  double sigma_rot_abs = 0.001;    // rad
  double sigma_rot_frac = 0.01;    // of step angle
};

/// Covariance used for every odometry step when the source reports none.
Matrix6d unified_local_covariance(const Pose& relative,
                                  const LocalCovariancePolicy& policy = {});

inline constexpr int kReferenceSatellites = 10;

/// diag(s^2, s^2, (2s)^2) with s = base_sigma * max(1, n_ref / n).
/// Unknown (negative) counts are treated as n_ref; zero satellites maps to a
/// very large sigma.
Eigen::Matrix3d gps_covariance(int satellite_count, double base_sigma,
                               int reference_satellites = kReferenceSatellites);

/// diag(s^2) with s = base_sigma * max(1, ratio, 1/ratio)^2.
Eigen::Matrix3d mag_covariance(double measured_norm, double reference_norm,
                               double base_sigma);

inline constexpr double kBaroVarianceFloor = 1e-4;

/// Unbiased sample variance, floored; default_variance when < 2 samples.
double baro_variance(std::span<const double> window, double default_variance);

// ---------------------------------------------------------------------------
// Robust loss

struct HuberValue {
  double loss = 0.0;
  double derivative = 1.0;  // d loss / d s
};

/// Huber loss of a squared whitened norm s: s below delta^2, linear beyond.
HuberValue huber(double squared_norm, double delta);

// ---------------------------------------------------------------------------
// Factor

enum class FactorKind { kLocal, kGps, kMag, kBaro };

const char* to_string(FactorKind kind);

/// Raw residual and its Jacobian w.r.t. the Tangent6 of every bound node,
/// stacked left to right in binding order.
struct Linearization {
  ResidualVector residual;
  FactorJacobian jacobian;
};

/// A residual-producing constraint binding one or two graph nodes. Immutable
/// after construction.
class Factor {
 public:
  static Factor local(NodeId prev, NodeId curr, const LocalMeasurement& z,
                      const Matrix6d& covariance);
  static Factor gps(NodeId node, const GpsMeasurement& z,
                    const Eigen::Matrix3d& covariance,
                    std::optional<double> huber_delta = std::nullopt);
  /// Throws DataError for a zero-norm measurement or reference.
  static Factor mag(NodeId node, const MagMeasurement& z, const MagReference& ref,
                    const Eigen::Matrix3d& covariance);
  static Factor baro(NodeId node, const BaroMeasurement& z);

  FactorKind kind() const { return kind_; }
  std::span<const NodeId> nodes() const { return {nodes_.data(), node_count_}; }
  bool binds(NodeId id) const;
  int dimension() const { return static_cast<int>(covariance_.rows()); }
  const FactorCovariance& covariance() const { return covariance_; }
  std::optional<double> huber_delta() const { return huber_delta_; }

  /// states[i] is the state of nodes()[i].
  ResidualVector residual(std::span<const Pose> states) const;
  Linearization linearize(std::span<const Pose> states) const;

  /// Applies L^-1 where covariance = L L^T.
  ResidualVector whiten(const ResidualVector& r) const;
  FactorJacobian whiten(const FactorJacobian& j) const;

  template <class T>
  const T& measurement() const { return std::get<T>(measurement_); }
  const MagReference& mag_reference() const { return mag_reference_; }

 private:
  using Measurement =
      std::variant<LocalMeasurement, GpsMeasurement, MagMeasurement, BaroMeasurement>;

  Factor(FactorKind kind, std::array<NodeId, 2> nodes, std::size_t node_count,
         Measurement z, const FactorCovariance& covariance,
         std::optional<double> huber_delta);

  FactorKind kind_;
  std::array<NodeId, 2> nodes_;
  std::size_t node_count_;
  Measurement measurement_;
  MagReference mag_reference_;
  FactorCovariance covariance_;
  FactorCovariance sqrt_covariance_;  // lower Cholesky factor
  std::optional<double> huber_delta_;
};

}  // namespace gfusion
