#include "gfusion/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gfusion/errors.hpp"

namespace gfusion {

FrameTransform frame_transform(const GraphNode& node, const Pose& local_pose) {
  FrameTransform t;
  t.rotation = node.state.orientation * local_pose.orientation.inverse();
  t.translation = node.state.position - t.rotation * local_pose.position;
  return t;
}

Pose predict_global(const Pose& local_pose, const FrameTransform& transform) {
  return transform.as_pose() * local_pose;
}

PoseGraph::PoseGraph(GraphOptions options) : options_(std::move(options)) {
  if (options_.window_capacity < 2) throw ConfigError("window capacity must be at least 2");
  if (!(options_.keyframe_interval >= 0.0)) throw ConfigError("keyframe interval must be >= 0");
  if (!(options_.association_tolerance >= 0.0)) {
    throw ConfigError("association tolerance must be >= 0");
  }
}

std::optional<NodeId> PoseGraph::add_odometry(const Pose& local_pose, double t,
                                              const std::optional<Matrix6d>& covariance) {
  if (!std::isfinite(t)) throw OrderingError("odometry timestamp is not finite");
  if (last_odometry_time_ && !(t > *last_odometry_time_)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "odometry timestamp " << t << " does not increase (previous "
        << *last_odometry_time_ << ")";
    throw OrderingError(msg.str());
  }
  last_odometry_time_ = t;

  if (nodes_.empty()) {
    GraphNode n{next_id_++, t, local_pose, local_pose, true};
    bootstrap_fixed_ = true;
    nodes_.push_back(n);
    retry_pending();
    return n.id;
  }

  const GraphNode& last = nodes_.back();
  // 1e-9 s slack so that a nominal 0.1 s step computed as k/10 passes.
  if (t - last.timestamp < options_.keyframe_interval - 1e-9) return std::nullopt;

  const Pose relative = relative_pose(last.local_pose, local_pose);
  GraphNode n{next_id_++, t, last.state * relative, local_pose, false};
  const Matrix6d cov =
      covariance ? *covariance : unified_local_covariance(relative, options_.local_policy);
  factors_.push_back(std::make_shared<const Factor>(
      Factor::local(last.id, n.id, LocalMeasurement{relative}, cov)));
  ++local_counters_.attached;
  nodes_.push_back(n);
  retry_pending();
  return n.id;
}

std::optional<std::size_t> PoseGraph::nearest_node(double t) const {
  if (nodes_.empty()) return std::nullopt;
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t,
                             [](const GraphNode& n, double v) { return n.timestamp < v; });
  std::size_t best;
  if (it == nodes_.end()) {
    best = nodes_.size() - 1;
  } else if (it == nodes_.begin()) {
    best = 0;
  } else {
    const auto i = static_cast<std::size_t>(it - nodes_.begin());
    // ties go to the earlier node
    best = (t - nodes_[i - 1].timestamp <= it->timestamp - t) ? i - 1 : i;
  }
  return best;
}

MeasurementCounters& PoseGraph::counters_for(const GlobalMeasurement& m) {
  switch (m.index()) {
    case 0: return gps_counters_;
    case 1: return mag_counters_;
    default: return baro_counters_;
  }
}

const MeasurementCounters& PoseGraph::counters(FactorKind kind) const {
  switch (kind) {
    case FactorKind::kGps: return gps_counters_;
    case FactorKind::kMag: return mag_counters_;
    case FactorKind::kBaro: return baro_counters_;
    case FactorKind::kLocal: break;
  }
  return local_counters_;
}

AttachResult PoseGraph::bind(const GlobalMeasurement& measurement, const GraphNode& node) {
  auto& counters = counters_for(measurement);
  std::shared_ptr<const Factor> factor;
  try {
    if (const auto* gps = std::get_if<GpsMeasurement>(&measurement)) {
      factor = std::make_shared<const Factor>(Factor::gps(
          node.id, *gps,
          gps_covariance(gps->satellites, options_.gps_base_sigma,
                         options_.gps_reference_satellites),
          options_.gps_huber_delta));
    } else if (const auto* mag = std::get_if<MagMeasurement>(&measurement)) {
      const Eigen::Matrix3d cov =
          mag_covariance(mag->field.norm(), options_.mag_reference.world_field.norm(),
                         options_.mag_base_sigma);
      factor = std::make_shared<const Factor>(
          Factor::mag(node.id, *mag, options_.mag_reference, cov));
    } else {
      factor = std::make_shared<const Factor>(
          Factor::baro(node.id, std::get<BaroMeasurement>(measurement)));
    }
  } catch (const DataError&) {
    ++counters.rejected;
    return {AttachStatus::kRejected, std::nullopt};
  }
  factors_.push_back(std::move(factor));
  ++counters.attached;

  if (bootstrap_fixed_ && std::holds_alternative<GpsMeasurement>(measurement)) {
    // GPS anchors translation from here on; release the bootstrap anchor.
    for (auto& n : nodes_) n.fixed = false;
    bootstrap_fixed_ = false;
  }
  return {AttachStatus::kAttached, node.id};
}

AttachResult PoseGraph::attach_global(const GlobalMeasurement& measurement, double t) {
  if (!std::isfinite(t)) {
    ++counters_for(measurement).rejected;
    return {AttachStatus::kRejected, std::nullopt};
  }
  if (nodes_.empty() || t > nodes_.back().timestamp) {
    pending_.push_back({measurement, t});
    return {AttachStatus::kBuffered, std::nullopt};
  }
  const std::size_t i = *nearest_node(t);
  if (std::abs(nodes_[i].timestamp - t) > options_.association_tolerance) {
    ++counters_for(measurement).dropped;
    return {AttachStatus::kDropped, std::nullopt};
  }
  return bind(measurement, nodes_[i]);
}

AttachResult PoseGraph::attach_gps_lla(const GeoPoint& p, int satellites, double t) {
  validate(p);
  if (!enu_origin_) set_enu_origin(p);
  GpsMeasurement m;
  m.position = to_enu(p);
  m.satellites = satellites;
  m.timestamp = t;
  return attach_global(m, t);
}

void PoseGraph::retry_pending() {
  if (pending_.empty()) return;
  const double newest = nodes_.back().timestamp;
  std::vector<Pending> still;
  for (auto& p : pending_) {
    if (p.timestamp > newest) {
      still.push_back(std::move(p));
    } else {
      attach_global(p.measurement, p.timestamp);
    }
  }
  pending_ = std::move(still);
}

std::size_t PoseGraph::flush_pending() {
  std::size_t attached = 0;
  auto pending = std::move(pending_);
  pending_.clear();
  for (auto& p : pending) {
    auto& c = counters_for(p.measurement);
    if (nodes_.empty()) {
      ++c.dropped;
      continue;
    }
    const std::size_t i = *nearest_node(p.timestamp);
    if (std::abs(nodes_[i].timestamp - p.timestamp) > options_.association_tolerance) {
      ++c.dropped;
      continue;
    }
    if (bind(p.measurement, nodes_[i]).status == AttachStatus::kAttached) ++attached;
  }
  return attached;
}

std::size_t PoseGraph::trim_window() {
  std::size_t removed = 0;
  while (nodes_.size() > options_.window_capacity) {
    trimmed_.push_back(nodes_.front());
    nodes_.pop_front();
    ++removed;
  }
  if (removed == 0) return 0;
  const NodeId oldest = nodes_.front().id;
  std::erase_if(factors_, [oldest](const std::shared_ptr<const Factor>& f) {
    return std::any_of(f->nodes().begin(), f->nodes().end(),
                       [oldest](NodeId id) { return id < oldest; });
  });
  for (auto& n : nodes_) n.fixed = false;
  nodes_.front().fixed = true;
  bootstrap_fixed_ = false;
  return removed;
}

GraphSnapshot PoseGraph::snapshot() const {
  GraphSnapshot s;
  s.ids.reserve(nodes_.size());
  s.states.reserve(nodes_.size());
  s.fixed.reserve(nodes_.size());
  for (const auto& n : nodes_) {
    s.ids.push_back(n.id);
    s.states.push_back(n.state);
    s.fixed.push_back(n.fixed);
  }
  s.factors = factors_;
  return s;
}

void PoseGraph::apply(const std::vector<NodeId>& ids, const std::vector<Pose>& states) {
  if (ids.size() != states.size()) throw std::invalid_argument("ids/states size mismatch");
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (!contains(ids[k])) continue;
    auto& n = nodes_[static_cast<std::size_t>(ids[k] - nodes_.front().id)];
    if (!n.fixed) n.state = states[k];
  }
}

bool PoseGraph::contains(NodeId id) const {
  return !nodes_.empty() && id >= nodes_.front().id && id <= nodes_.back().id;
}

const GraphNode& PoseGraph::node(NodeId id) const {
  if (!contains(id)) throw std::out_of_range("node " + std::to_string(id) + " not in graph");
  return nodes_[static_cast<std::size_t>(id - nodes_.front().id)];
}

std::size_t PoseGraph::factor_count(FactorKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      factors_.begin(), factors_.end(),
      [kind](const std::shared_ptr<const Factor>& f) { return f->kind() == kind; }));
}

std::vector<GraphNode> PoseGraph::take_trimmed() {
  std::vector<GraphNode> out;
  out.swap(trimmed_);
  return out;
}

void PoseGraph::set_enu_origin(const GeoPoint& origin) { enu_origin_.emplace(origin); }

Eigen::Vector3d PoseGraph::to_enu(const GeoPoint& p) const {
  if (!enu_origin_) throw StateError("ENU origin not initialized (no GPS fix yet)");
  return lla_to_enu(p, *enu_origin_);
}

}  // namespace gfusion
