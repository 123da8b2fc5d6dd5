#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gfusion/manifold.hpp"

namespace gfusion {

struct TimedPose {
  double timestamp = 0.0;
  Pose pose;
};

/// Timestamped pose sequence with strictly increasing timestamps.
class Trajectory {
 public:
  Trajectory() = default;

  /// Throws OrderingError when t does not increase.
  void push_back(double t, const Pose& pose);

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const TimedPose& operator[](std::size_t i) const { return samples_[i]; }
  const TimedPose& front() const { return samples_.front(); }
  const TimedPose& back() const { return samples_.back(); }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  std::vector<Eigen::Vector3d> positions() const;
  /// Applies a rigid transform on the left of every pose.
  Trajectory transformed(const Pose& t) const;

 private:
  std::vector<TimedPose> samples_;
};

struct PosePair {
  std::size_t est = 0;
  std::size_t gt = 0;
};

inline constexpr double kDefaultAssociationDt = 0.02;

/// Nearest-timestamp pairing, each ground-truth sample used at most once.
/// Throws EvaluationError when nothing pairs.
std::vector<PosePair> associate(const Trajectory& est, const Trajectory& gt,
                                double max_dt = kDefaultAssociationDt);

/// gt ~ scale * rotation * est + translation.
struct AlignmentTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double scale = 1.0;

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return scale * (rotation * p) + translation;
  }
};

/// Closed-form least-squares alignment (Horn, unit quaternion). Throws
/// EvaluationError for fewer than three pairs or a collinear configuration.
AlignmentTransform horn_align(std::span<const Eigen::Vector3d> est,
                              std::span<const Eigen::Vector3d> gt,
                              bool with_scale = false);

struct AteOptions {
  double max_dt = kDefaultAssociationDt;
  bool with_scale = false;
};

/// Associates and aligns est onto gt. Accepts degenerate configurations.
AlignmentTransform align_trajectories(const Trajectory& est, const Trajectory& gt,
                                      const AteOptions& options = {});

/// Position RMSE after alignment. Degenerate (collinear, < 3 pairs)
/// configurations still have a well-defined minimum and are accepted here.
double ate_rmse(const Trajectory& est, const Trajectory& gt, const AteOptions& options = {});

struct RpeSegment {
  double length = 0.0;                // m
  double translation_percent = 0.0;   // mean translational error, % of length
  double rotation_deg_per_100m = 0.0; // mean rotational error
  std::size_t count = 0;
};

struct RpeReport {
  std::vector<RpeSegment> segments;  // only lengths with at least one sample
  bool empty() const { return segments.empty(); }
};

inline const std::vector<double>& default_rpe_lengths() {
  static const std::vector<double> lengths{100, 200, 300, 400, 500, 600, 700, 800};
  return lengths;
}

/// Relative pose error over every start index and every segment length.
RpeReport rpe(const Trajectory& est, const Trajectory& gt,
              std::span<const double> segment_lengths = default_rpe_lengths(),
              double max_dt = kDefaultAssociationDt);

struct MetricReport {
  double ate_rmse = 0.0;
  std::size_t pairs = 0;
  std::size_t est_samples = 0;
  std::size_t gt_samples = 0;
  RpeReport rpe;
  bool rpe_empty = true;
  double rpe_translation_percent = 0.0;  // mean over evaluated lengths
  double rpe_rotation_deg_per_100m = 0.0;
};

struct EvaluationOptions {
  double max_dt = kDefaultAssociationDt;
  bool with_scale = false;
  std::vector<double> rpe_lengths = default_rpe_lengths();
};

MetricReport evaluate(const Trajectory& est, const Trajectory& gt,
                      const EvaluationOptions& options = {});

std::string format_table(const MetricReport& report);
std::string format_key_values(const MetricReport& report);

}  // namespace gfusion
