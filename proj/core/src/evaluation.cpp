#include "gfusion/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "gfusion/errors.hpp"

namespace gfusion {
namespace {

AlignmentTransform align_points(std::span<const Eigen::Vector3d> est,
                                std::span<const Eigen::Vector3d> gt, bool with_scale,
                                bool require_unique) {
  if (est.size() != gt.size()) throw EvaluationError("alignment needs equal point counts");
  const std::size_t n = est.size();
  if (n == 0) throw EvaluationError("alignment needs at least one pair");
  if (require_unique && n < 3) {
    throw EvaluationError("alignment needs at least 3 pairs, got " + std::to_string(n));
  }

  Eigen::Vector3d ce = Eigen::Vector3d::Zero(), cg = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    ce += est[i];
    cg += gt[i];
  }
  ce /= static_cast<double>(n);
  cg /= static_cast<double>(n);

  Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
  double est_spread = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d e = est[i] - ce;
    s.noalias() += e * (gt[i] - cg).transpose();
    est_spread += e.squaredNorm();
  }

  if (require_unique) {
    const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::Matrix3d>(s).singularValues();
    if (!(sv[0] > 0.0) || sv[1] <= 1e-10 * sv[0]) {
      throw EvaluationError("degenerate (collinear) point configuration");
    }
  }

  const double sxx = s(0, 0), sxy = s(0, 1), sxz = s(0, 2);
  const double syx = s(1, 0), syy = s(1, 1), syz = s(1, 2);
  const double szx = s(2, 0), szy = s(2, 1), szz = s(2, 2);
  Eigen::Matrix4d nm;
  nm << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
        syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
        szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
        sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(nm);
  const Eigen::Vector4d q = eig.eigenvectors().col(3);

  AlignmentTransform t;
  t.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
  if (with_scale && est_spread > 0.0) {
    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i) num += (gt[i] - cg).dot(t.rotation * (est[i] - ce));
    t.scale = num / est_spread;
  }
  t.translation = cg - t.scale * (t.rotation * ce);
  return t;
}

struct PairedTrajectories {
  std::vector<Pose> est;
  std::vector<Pose> gt;
};

PairedTrajectories paired(const Trajectory& est, const Trajectory& gt, double max_dt) {
  PairedTrajectories p;
  for (const auto& pair : associate(est, gt, max_dt)) {
    p.est.push_back(est[pair.est].pose);
    p.gt.push_back(gt[pair.gt].pose);
  }
  return p;
}

}  // namespace

void Trajectory::push_back(double t, const Pose& pose) {
  if (!std::isfinite(t)) throw OrderingError("trajectory timestamp is not finite");
  if (!samples_.empty() && !(t > samples_.back().timestamp)) {
    throw OrderingError("trajectory timestamps must strictly increase");
  }
  samples_.push_back({t, pose});
}

std::vector<Eigen::Vector3d> Trajectory::positions() const {
  std::vector<Eigen::Vector3d> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.pose.position);
  return out;
}

Trajectory Trajectory::transformed(const Pose& t) const {
  Trajectory out;
  out.samples_.reserve(samples_.size());
  for (const auto& s : samples_) out.samples_.push_back({s.timestamp, t * s.pose});
  return out;
}

std::vector<PosePair> associate(const Trajectory& est, const Trajectory& gt, double max_dt) {
  if (est.empty() || gt.empty()) throw EvaluationError("cannot associate an empty trajectory");
  std::vector<PosePair> pairs;
  std::vector<bool> used(gt.size(), false);
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double t = est[i].timestamp;
    auto it = std::lower_bound(gt.begin(), gt.end(), t,
                               [](const TimedPose& s, double v) { return s.timestamp < v; });
    std::size_t best = gt.size();
    double best_dt = max_dt;
    const auto consider = [&](std::size_t j) {
      const double dt = std::abs(gt[j].timestamp - t);
      if (!used[j] && dt <= best_dt) {
        if (best == gt.size() || dt < best_dt) {
          best = j;
          best_dt = dt;
        }
      }
    };
    const auto j = static_cast<std::size_t>(it - gt.begin());
    if (j > 0) consider(j - 1);
    if (j < gt.size()) consider(j);
    if (best < gt.size()) {
      used[best] = true;
      pairs.push_back({i, best});
    }
  }
  if (pairs.empty()) {
    throw EvaluationError("no estimate/ground-truth pairs within " + std::to_string(max_dt) +
                          " s");
  }
  return pairs;
}

AlignmentTransform horn_align(std::span<const Eigen::Vector3d> est,
                              std::span<const Eigen::Vector3d> gt, bool with_scale) {
  return align_points(est, gt, with_scale, true);
}

AlignmentTransform align_trajectories(const Trajectory& est, const Trajectory& gt,
                                      const AteOptions& options) {
  const PairedTrajectories p = paired(est, gt, options.max_dt);
  std::vector<Eigen::Vector3d> pe, pg;
  for (std::size_t i = 0; i < p.est.size(); ++i) {
    pe.push_back(p.est[i].position);
    pg.push_back(p.gt[i].position);
  }
  return align_points(pe, pg, options.with_scale, false);
}

double ate_rmse(const Trajectory& est, const Trajectory& gt, const AteOptions& options) {
  const PairedTrajectories p = paired(est, gt, options.max_dt);
  std::vector<Eigen::Vector3d> pe, pg;
  for (std::size_t i = 0; i < p.est.size(); ++i) {
    pe.push_back(p.est[i].position);
    pg.push_back(p.gt[i].position);
  }
  const AlignmentTransform t = align_points(pe, pg, options.with_scale, false);
  double sum = 0.0;
  for (std::size_t i = 0; i < pe.size(); ++i) sum += (pg[i] - t.apply(pe[i])).squaredNorm();
  return std::sqrt(sum / static_cast<double>(pe.size()));
}

namespace {

// Rotation angle between a and b from the quaternion chord; exactly zero
// for equal inputs.
double chordal_angle(const UnitQuaternion& a, const UnitQuaternion& b) {
  const Eigen::Vector4d qa = a.eigen().coeffs(), qb = b.eigen().coeffs();
  const double minus = (qa - qb).norm(), plus = (qa + qb).norm();
  return 4.0 * std::atan2(std::min(minus, plus), std::max(minus, plus));
}

}  // namespace

RpeReport rpe(const Trajectory& est, const Trajectory& gt,
              std::span<const double> segment_lengths, double max_dt) {
  const PairedTrajectories p = paired(est, gt, max_dt);
  const std::size_t n = p.gt.size();
  std::vector<double> dist(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    dist[i] = dist[i - 1] + (p.gt[i].position - p.gt[i - 1].position).norm();
  }

  RpeReport report;
  for (double length : segment_lengths) {
    if (!(length > 0.0)) throw EvaluationError("segment lengths must be positive");
    RpeSegment seg;
    seg.length = length;
    double t_sum = 0.0, r_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = std::lower_bound(dist.begin() + static_cast<std::ptrdiff_t>(i),
                                       dist.end(), dist[i] + length);
      if (it == dist.end()) break;
      const auto j = static_cast<std::size_t>(it - dist.begin());
      const Pose dg = relative_pose(p.gt[i], p.gt[j]);
      const Pose de = relative_pose(p.est[i], p.est[j]);
      t_sum += relative_pose(de, dg).position.norm() / length;
      r_sum += chordal_angle(de.orientation, dg.orientation) / length;
      ++seg.count;
    }
    if (seg.count == 0) continue;
    const double c = static_cast<double>(seg.count);
    seg.translation_percent = 100.0 * t_sum / c;
    seg.rotation_deg_per_100m = (r_sum / c) * (180.0 / std::numbers::pi) * 100.0;
    report.segments.push_back(seg);
  }
  return report;
}

MetricReport evaluate(const Trajectory& est, const Trajectory& gt,
                      const EvaluationOptions& options) {
  MetricReport r;
  r.est_samples = est.size();
  r.gt_samples = gt.size();
  r.pairs = associate(est, gt, options.max_dt).size();
  r.ate_rmse = ate_rmse(est, gt, {options.max_dt, options.with_scale});
  r.rpe = rpe(est, gt, options.rpe_lengths, options.max_dt);
  r.rpe_empty = r.rpe.empty();
  if (!r.rpe_empty) {
    for (const auto& s : r.rpe.segments) {
      r.rpe_translation_percent += s.translation_percent;
      r.rpe_rotation_deg_per_100m += s.rotation_deg_per_100m;
    }
    r.rpe_translation_percent /= static_cast<double>(r.rpe.segments.size());
    r.rpe_rotation_deg_per_100m /= static_cast<double>(r.rpe.segments.size());
  }
  return r;
}

std::string format_table(const MetricReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "ATE RMSE [m]        %12.6f\n", report.ate_rmse);
  out << line;
  std::snprintf(line, sizeof line, "pairs / est / gt    %zu / %zu / %zu\n", report.pairs,
                report.est_samples, report.gt_samples);
  out << line;
  if (report.rpe_empty) {
    out << "RPE                 (trajectory shorter than every segment length)\n";
    return out.str();
  }
  out << "RPE   length[m]   trans[%]   rot[deg/100m]   samples\n";
  for (const auto& s : report.rpe.segments) {
    std::snprintf(line, sizeof line, "      %9.1f %10.4f %15.4f %9zu\n", s.length,
                  s.translation_percent, s.rotation_deg_per_100m, s.count);
    out << line;
  }
  std::snprintf(line, sizeof line, "      %9s %10.4f %15.4f\n", "mean",
                report.rpe_translation_percent, report.rpe_rotation_deg_per_100m);
  out << line;
  return out.str();
}

std::string format_key_values(const MetricReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "ate_rmse_m = " << report.ate_rmse << "\n";
  out << "pairs = " << report.pairs << "\n";
  out << "est_samples = " << report.est_samples << "\n";
  out << "gt_samples = " << report.gt_samples << "\n";
  out << "rpe_empty = " << (report.rpe_empty ? "true" : "false") << "\n";
  out << "rpe_translation_percent = " << report.rpe_translation_percent << "\n";
  out << "rpe_rotation_deg_per_100m = " << report.rpe_rotation_deg_per_100m << "\n";
  for (const auto& s : report.rpe.segments) {
    const auto len = static_cast<long long>(std::llround(s.length));
    out << "rpe_" << len << "_translation_percent = " << s.translation_percent << "\n";
    out << "rpe_" << len << "_rotation_deg_per_100m = " << s.rotation_deg_per_100m << "\n";
    out << "rpe_" << len << "_samples = " << s.count << "\n";
  }
  return out.str();
}

}  // namespace gfusion
