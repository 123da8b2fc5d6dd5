#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "gfusion/factors.hpp"
#include "gfusion/geodesy.hpp"
#include "gfusion/manifold.hpp"

namespace gfusion {

struct GraphNode {
  NodeId id = 0;
  double timestamp = 0.0;
  Pose state;       // world frame estimate
  Pose local_pose;  // odometry pose at the same instant
  bool fixed = false;
};

/// Maps the odometry (local) frame into the world frame: global = T * local.
struct FrameTransform {
  UnitQuaternion rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Pose as_pose() const { return {translation, rotation}; }
};

FrameTransform frame_transform(const GraphNode& node, const Pose& local_pose);
Pose predict_global(const Pose& local_pose, const FrameTransform& transform);

struct GraphOptions {
  double keyframe_interval = 0.1;       // s
  std::size_t window_capacity = 1000;   // nodes
  double association_tolerance = 0.05;  // s
  LocalCovariancePolicy local_policy;
  double gps_base_sigma = 1.0;          // m
  int gps_reference_satellites = kReferenceSatellites;
  std::optional<double> gps_huber_delta = 1.0;
  MagReference mag_reference;
  double mag_base_sigma = 0.05;
};

using GlobalMeasurement = std::variant<GpsMeasurement, MagMeasurement, BaroMeasurement>;

enum class AttachStatus { kAttached, kBuffered, kDropped, kRejected };

struct AttachResult {
  AttachStatus status = AttachStatus::kDropped;
  std::optional<NodeId> node;
};

struct MeasurementCounters {
  std::size_t attached = 0;
  std::size_t dropped = 0;   // no node within the association tolerance
  std::size_t rejected = 0;  // invalid measurement (e.g. zero-norm field)
};

/// Copy of the optimization problem handed to the solver. Factors are shared
/// immutable objects; states are owned.
struct GraphSnapshot {
  std::vector<NodeId> ids;
  std::vector<Pose> states;
  std::vector<bool> fixed;
  std::vector<std::shared_ptr<const Factor>> factors;
};

/// Time-ordered pose nodes linked by odometry factors, with global sensor
/// factors attached by nearest timestamp. Single writer.
class PoseGraph {
 public:
  explicit PoseGraph(GraphOptions options = {});

  /// Feeds one odometry pose. Returns the new node id when the keyframe gate
  /// passes, nullopt when the pose is only buffered for high-rate output.
  /// Throws OrderingError unless t is greater than the previous odometry time.
  std::optional<NodeId> add_odometry(const Pose& local_pose, double t,
                                     const std::optional<Matrix6d>& covariance = std::nullopt);

  AttachResult attach_global(const GlobalMeasurement& measurement, double t);
  /// Converts with the graph's ENU origin; the first call sets the origin.
  AttachResult attach_gps_lla(const GeoPoint& p, int satellites, double t);

  /// Associates every still-buffered measurement to its nearest node (end of
  /// stream). Returns the number attached.
  std::size_t flush_pending();

  /// Removes oldest nodes beyond capacity and anchors the new oldest node.
  std::size_t trim_window();

  GraphSnapshot snapshot() const;
  /// Writes solver output back; ids no longer in the graph are ignored.
  void apply(const std::vector<NodeId>& ids, const std::vector<Pose>& states);

  const std::deque<GraphNode>& nodes() const { return nodes_; }
  const GraphNode& node(NodeId id) const;
  bool contains(NodeId id) const;
  const std::vector<std::shared_ptr<const Factor>>& factors() const { return factors_; }
  std::size_t factor_count(FactorKind kind) const;
  std::size_t pending_count() const { return pending_.size(); }

  /// Nodes removed by trim_window since the last call, oldest first.
  std::vector<GraphNode> take_trimmed();

  void set_enu_origin(const GeoPoint& origin);
  const std::optional<EnuOrigin>& enu_origin() const { return enu_origin_; }
  /// Throws StateError when no origin has been set.
  Eigen::Vector3d to_enu(const GeoPoint& p) const;

  const MeasurementCounters& counters(FactorKind kind) const;
  const GraphOptions& options() const { return options_; }

 private:
  struct Pending {
    GlobalMeasurement measurement;
    double timestamp;
  };

  std::optional<std::size_t> nearest_node(double t) const;
  AttachResult bind(const GlobalMeasurement& measurement, const GraphNode& node);
  void retry_pending();
  MeasurementCounters& counters_for(const GlobalMeasurement& m);

  GraphOptions options_;
  std::deque<GraphNode> nodes_;
  std::vector<std::shared_ptr<const Factor>> factors_;
  std::vector<Pending> pending_;
  std::vector<GraphNode> trimmed_;
  std::optional<EnuOrigin> enu_origin_;
  std::optional<double> last_odometry_time_;
  NodeId next_id_ = 0;
  bool bootstrap_fixed_ = false;
  MeasurementCounters gps_counters_, mag_counters_, baro_counters_, local_counters_;
};

}  // namespace gfusion
