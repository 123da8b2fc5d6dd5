// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any fails. Optional arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cli.hpp"
#include "gfusion/evaluation.hpp"
#include "gfusion/factors.hpp"
#include "gfusion/io.hpp"
#include "gfusion/pipeline.hpp"
#include "gfusion/simulate.hpp"
#include "gfusion/solver.hpp"

using namespace gfusion;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

constexpr int kSeeds = 10;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const Pose& truth_at(const SensorStreams& st, double t, double rate) {
  return st.truth[static_cast<std::size_t>(std::llround(t * rate))].pose;
}

FusionInputs inputs_of(const SensorStreams& st) {
  FusionInputs in;
  in.odometry = st.odometry;
  in.gps = st.gps;
  in.mag = st.mag;
  in.baro = st.baro;
  return in;
}

// --- 1 and 4: 1 km circle -------------------------------------------------

Scenario circle_scenario() {
  Scenario s;
  s.shape = Shape::kCircle;
  s.path_length = 1000.0;
  s.speed = 2.0;
  s.rate = 10.0;
  s.drift.sigma_trans_frac = 0.01;
  s.drift.sigma_yaw = 0.002;
  s.gps.rate = 1.0;
  s.gps.sigma = 0.5;
  s.gps.sigma_vertical = 0.5;
  return s;
}

FusionSettings circle_settings() {
  FusionSettings f;
  f.graph.keyframe_interval = 0.5;
  f.graph.window_capacity = 100;
  f.graph.gps_base_sigma = 0.5;
  f.graph.local_policy = {1e-4, 0.01, 0.002, 0.0};
  return f;
}

Outcome drift_elimination() {
  Outcome o{true, {}};
  double fused_max = 0.0, odom_min = 1e9, ratio_min = 1e9, fuse_seconds = 0.0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const SensorStreams st = simulate(circle_scenario(), static_cast<std::uint64_t>(seed));
    const auto start = Clock::now();
    const FusionResult r = run_fusion(inputs_of(st), circle_settings());
    fuse_seconds += seconds_since(start);
    const double fused = ate_rmse(r.fused, st.truth);
    const double odom = ate_rmse(st.odometry, st.truth);
    fused_max = std::max(fused_max, fused);
    odom_min = std::min(odom_min, odom);
    ratio_min = std::min(ratio_min, odom / fused);
    if (!(fused <= 0.5 && odom >= 3.0 && odom >= 5.0 * fused)) o.pass = false;
  }
  if (fuse_seconds >= 30.0) o.pass = false;
  o.detail = "max fused ATE " + fmt("%.3f m", fused_max) + ", min odometry ATE " +
             fmt("%.2f m", odom_min) + ", min ratio " + fmt("%.1f", ratio_min) + ", fusion " +
             fmt("%.1f s", fuse_seconds);
  return o;
}

Outcome huber_robustness() {
  Outcome o{true, {}};
  bool any_plain_exceeds = false;
  double worst_ratio = 0.0, plain_max = 0.0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto s = static_cast<std::uint64_t>(seed);
    const SensorStreams clean = simulate(circle_scenario(), s);
    Scenario noisy = circle_scenario();
    noisy.gps.outlier_fraction = 0.05;
    noisy.gps.outlier_magnitude = 50.0;
    const SensorStreams dirty = simulate(noisy, s);

    const double base = ate_rmse(run_fusion(inputs_of(clean), circle_settings()).fused, clean.truth);
    const double robust =
        ate_rmse(run_fusion(inputs_of(dirty), circle_settings()).fused, dirty.truth);
    FusionSettings plain_settings = circle_settings();
    plain_settings.graph.gps_huber_delta.reset();
    const double plain = ate_rmse(run_fusion(inputs_of(dirty), plain_settings).fused, dirty.truth);

    worst_ratio = std::max(worst_ratio, robust / base);
    plain_max = std::max(plain_max, plain / base);
    if (!(robust <= 2.0 * base)) o.pass = false;
    if (plain > 2.0 * base) any_plain_exceeds = true;
  }
  if (!any_plain_exceeds) o.pass = false;
  o.detail = "worst Huber/clean " + fmt("%.2f", worst_ratio) + ", worst plain/clean " +
             fmt("%.1f", plain_max);
  return o;
}

// --- 2: exact recovery ----------------------------------------------------

Outcome exact_recovery() {
  Outcome o{true, {}};
  double pos_max = 0.0, rot_max = 0.0;
  for (Shape shape : {Shape::kCircle, Shape::kFigureEight, Shape::kStraight, Shape::kHelix,
                      Shape::kWaypoints}) {
    Scenario s;
    s.shape = shape;
    s.path_length = 300.0;
    s.speed = 3.0;
    s.waypoints = {{0, 0, 0}, {60, 0, 0}, {60, 40, 5}, {-20, 40, 2}, {-20, -10, 0}};
    s.gps.sigma = 0.0;
    s.gps.sigma_vertical = 0.0;
    s.mag.enabled = true;
    s.mag.sigma = 0.0;
    s.mag.reference = {{0.1, 0.5, -0.8}, {}};
    s.baro.enabled = true;
    s.baro.sigma = 0.0;
    const SensorStreams st = simulate(s, 1);
    FusionSettings f;
    f.graph.keyframe_interval = 0.0;
    f.graph.window_capacity = 400;
    f.graph.gps_base_sigma = 0.01;
    f.graph.mag_reference = s.mag.reference;
    const FusionResult r = run_fusion(inputs_of(st), f);
    if (r.fused.size() != st.truth.size()) o.pass = false;
    for (const auto& node : r.fused) {
      const Pose& t = truth_at(st, node.timestamp, s.rate);
      pos_max = std::max(pos_max, (node.pose.position - t.position).norm());
      rot_max = std::max(rot_max, rotation_angle(node.pose.orientation, t.orientation));
    }
  }
  if (!(pos_max <= 1e-6 && rot_max <= 1e-8)) o.pass = false;
  o.detail = "max position error " + fmt("%.2e m", pos_max) + ", max rotation error " +
             fmt("%.2e rad", rot_max);
  return o;
}

// --- 3: Jacobians ---------------------------------------------------------

Outcome jacobians() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(-1.0, 1.0), angle(0.0, std::numbers::pi);
  const auto vec = [&](double scale) { return Eigen::Vector3d(u(rng), u(rng), u(rng)) * scale; };
  const auto rot = [&](double max_angle) {
    const Eigen::Vector3d axis(n(rng), n(rng), n(rng));
    return UnitQuaternion::from_axis_angle(axis.normalized(), angle(rng) * max_angle / std::numbers::pi);
  };
  double worst[4] = {0, 0, 0, 0};
  for (int i = 0; i < 1000; ++i) {
    std::array<Pose, 2> xs{Pose{vec(50), rot(std::numbers::pi)}, Pose{vec(50), rot(std::numbers::pi)}};
    const Pose z = relative_pose(xs[0], xs[1]) * Pose{vec(0.5), rot(2.0)};
    const MagReference ref{vec(1) + Eigen::Vector3d(0, 0.5, -0.5), rot(std::numbers::pi)};
    const std::vector<Factor> factors{
        Factor::local(0, 1, {z}, Matrix6d::Identity()),
        Factor::gps(0, {vec(100), 10, 0.0}, Eigen::Matrix3d::Identity()),
        Factor::mag(0, {vec(1) + Eigen::Vector3d(0, 0, 1.2), 0.0}, ref, Eigen::Matrix3d::Identity()),
        Factor::baro(0, {u(rng) * 20, 1.0, 0.0})};
    for (std::size_t k = 0; k < factors.size(); ++k) {
      const std::span<const Pose> s(xs.data(), factors[k].nodes().size());
      const Eigen::MatrixXd a = factors[k].linearize(s).jacobian;
      const Eigen::MatrixXd d = numeric_jacobian(factors[k], s);
      worst[k] = std::max(worst[k], (a - d).norm() / std::max(1.0, d.norm()));
    }
  }
  Outcome o{true, "worst relative error"};
  const char* names[4] = {"local", "gps", "mag", "baro"};
  for (int k = 0; k < 4; ++k) {
    if (!(worst[k] <= 1e-5)) o.pass = false;
    o.detail += std::string(k ? ", " : " ") + names[k] + " " + fmt("%.1e", worst[k]);
  }
  return o;
}

// --- 5: yaw observability -------------------------------------------------

Scenario straight_scenario(bool with_mag) {
  Scenario s;
  s.shape = Shape::kStraight;
  s.path_length = 10.0;
  s.speed = 0.05;
  s.rate = 10.0;
  s.drift.sigma_trans_frac = 0.01;
  s.drift.sigma_yaw = 0.01;
  s.gps.sigma = 3.0;
  s.gps.sigma_vertical = 3.0;
  s.mag.enabled = with_mag;
  s.mag.sigma = 0.01;
  s.mag.reference = {{0.0, 1.0, 0.0}, {}};
  return s;
}

double mean_yaw_error_deg(bool with_mag, int seed) {
  const Scenario s = straight_scenario(with_mag);
  const SensorStreams st = simulate(s, static_cast<std::uint64_t>(seed));
  FusionSettings f;
  f.graph.keyframe_interval = 0.5;
  f.graph.window_capacity = 100;
  f.graph.gps_base_sigma = s.gps.sigma;
  // five odometry steps per keyframe
  f.graph.local_policy = {1e-3, 0.01, s.drift.sigma_yaw * std::sqrt(5.0), 0.0};
  f.graph.mag_reference = s.mag.reference;
  f.graph.mag_base_sigma = s.mag.sigma;
  f.use_mag = with_mag;
  const FusionResult r = run_fusion(inputs_of(st), f);
  double sum = 0.0;
  for (const auto& node : r.fused) {
    const Pose& t = truth_at(st, node.timestamp, s.rate);
    sum += std::abs(std::remainder(node.pose.orientation.yaw() - t.orientation.yaw(),
                                   2.0 * std::numbers::pi));
  }
  return sum / static_cast<double>(r.fused.size()) * kRadToDeg;
}

Outcome yaw_observability() {
  double with = 0.0, without = 0.0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    with += mean_yaw_error_deg(true, seed);
    without += mean_yaw_error_deg(false, seed);
  }
  with /= kSeeds;
  without /= kSeeds;
  return {with <= 1.0 && without >= 5.0, "mean yaw error with magnetometer " +
                                             fmt("%.2f deg", with) + ", without " +
                                             fmt("%.2f deg", without)};
}

// --- 6: vertical channel --------------------------------------------------

Scenario helix_scenario() {
  Scenario s;
  s.shape = Shape::kHelix;
  s.path_length = 500.0;
  s.helix_rise = 30.0;
  s.speed = 5.0;
  s.rate = 10.0;
  s.drift.sigma_trans_frac = 0.01;
  s.drift.sigma_yaw = 0.002;
  s.drift.sigma_roll_pitch = 0.02;
  s.gps.sigma = 0.5;
  s.gps.sigma_vertical = 3.0;
  s.baro.enabled = true;
  s.baro.sigma = 0.3;
  return s;
}

double height_rmse(bool with_baro, int seed) {
  const Scenario s = helix_scenario();
  const SensorStreams st = simulate(s, static_cast<std::uint64_t>(seed));
  FusionSettings f;
  f.graph.keyframe_interval = 0.5;
  f.graph.window_capacity = 100;
  f.graph.gps_base_sigma = s.gps.sigma_vertical;
  f.graph.local_policy = {1e-3, 0.01, s.drift.sigma_roll_pitch * std::sqrt(5.0), 0.0};
  f.use_baro = with_baro;
  const FusionResult r = run_fusion(inputs_of(st), f);
  double sum = 0.0;
  for (const auto& node : r.fused) {
    const double e = node.pose.position.z() - truth_at(st, node.timestamp, s.rate).position.z();
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(r.fused.size()));
}

Outcome vertical_channel() {
  double with = 0.0, without = 0.0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    with = std::max(with, height_rmse(true, seed));
    without += height_rmse(false, seed);
  }
  without /= kSeeds;
  return {with <= 0.5 && without >= 1.0, "worst height RMSE with barometer " +
                                             fmt("%.3f m", with) + ", mean without " +
                                             fmt("%.3f m", without)};
}

// --- 7: metric oracles ----------------------------------------------------

Outcome metric_oracles() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(-1.0, 1.0), angle(0.0, std::numbers::pi);
  const auto random_pose = [&](double scale) {
    const Eigen::Vector3d axis(n(rng), n(rng), n(rng));
    return Pose{Eigen::Vector3d(u(rng), u(rng), u(rng)) * scale,
                UnitQuaternion::from_axis_angle(axis.normalized(), angle(rng))};
  };
  double horn_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Pose t = random_pose(100.0);
    std::vector<Eigen::Vector3d> src, dst;
    for (int k = 0; k < 20; ++k) {
      src.push_back(Eigen::Vector3d(u(rng), u(rng), u(rng)) * 30.0);
      dst.push_back(t * src.back());
    }
    const AlignmentTransform a = horn_align(src, dst);
    horn_err = std::max(horn_err, (a.rotation - t.orientation.matrix()).norm());
    horn_err = std::max(horn_err, (a.translation - t.position).norm() / 100.0);
  }

  Trajectory gt;
  Pose p;
  for (int k = 0; k < 600; ++k) {
    gt.push_back(0.1 * k, p);
    p = p * Pose{{0.5, 0.05 * u(rng), 0.02 * u(rng)},
                 UnitQuaternion::exp(Eigen::Vector3d(0.01 * u(rng), 0.01 * u(rng), 0.05 * u(rng)))};
  }
  Trajectory est;
  for (const auto& s : gt) {
    est.push_back(s.timestamp, {s.pose.position + Eigen::Vector3d(n(rng), n(rng), n(rng)) * 0.2,
                                s.pose.orientation * UnitQuaternion::exp(Eigen::Vector3d(
                                                         n(rng), n(rng), n(rng)) * 0.01)});
  }
  const double ate_self = ate_rmse(gt, gt);
  double rpe_self = 0.0;
  for (const auto& s : rpe(gt, gt).segments) {
    rpe_self = std::max({rpe_self, s.translation_percent, s.rotation_deg_per_100m});
  }
  const double base_ate = ate_rmse(est, gt);
  const RpeReport base_rpe = rpe(est, gt);
  double invariance = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Trajectory moved = est.transformed(random_pose(500.0));
    invariance = std::max(invariance, std::abs(ate_rmse(moved, gt) - base_ate));
    const RpeReport r = rpe(moved, gt);
    for (std::size_t k = 0; k < r.segments.size(); ++k) {
      invariance = std::max(invariance, std::abs(r.segments[k].translation_percent -
                                                 base_rpe.segments[k].translation_percent));
      invariance = std::max(invariance, std::abs(r.segments[k].rotation_deg_per_100m -
                                                 base_rpe.segments[k].rotation_deg_per_100m));
    }
  }
  const bool pass = horn_err <= 1e-10 && ate_self == 0.0 && rpe_self == 0.0 &&
                    !base_rpe.empty() && invariance <= 1e-10;
  return {pass, "Horn error " + fmt("%.1e", horn_err) + ", self ATE " + fmt("%g", ate_self) +
                    ", self RPE " + fmt("%g", rpe_self) + ", invariance " +
                    fmt("%.1e", invariance)};
}

// --- 8: linear scaling ----------------------------------------------------

GraphSnapshot chain(std::size_t n) {
  std::mt19937_64 rng(n);
  std::normal_distribution<double> noise;
  GraphSnapshot s;
  Pose truth, guess;
  const Pose step{{1.0, 0.0, 0.0}, UnitQuaternion::from_yaw(0.01)};
  for (std::size_t i = 0; i < n; ++i) {
    s.ids.push_back(static_cast<NodeId>(i));
    s.states.push_back(guess);
    s.fixed.push_back(i == 0);
    s.factors.push_back(std::make_shared<const Factor>(Factor::gps(
        static_cast<NodeId>(i),
        {truth.position + Eigen::Vector3d(noise(rng), noise(rng), noise(rng)) * 0.5, 10, 0.0},
        Eigen::Matrix3d::Identity() * 0.25, 1.0)));
    if (i > 0) {
      s.factors.push_back(std::make_shared<const Factor>(Factor::local(
          static_cast<NodeId>(i - 1), static_cast<NodeId>(i), {step},
          Matrix6d::Identity() * 1e-4)));
    }
    truth = truth * step;
    guess = guess * Pose{step.position * 1.01, UnitQuaternion::from_yaw(0.0105)};
  }
  return s;
}

double solve_seconds(const GraphSnapshot& s, int* iterations) {
  SolverOptions options;
  options.max_iterations = 10;
  options.cost_tolerance = 1e-300;
  options.gradient_tolerance = 1e-300;
  double best = 1e9;
  for (int r = 0; r < 9; ++r) {
    const auto start = Clock::now();
    const SolverResult result = optimize(s, options);
    best = std::min(best, seconds_since(start));
    *iterations = result.report.iterations;
  }
  return best;
}

Outcome linear_scaling() {
  int it1 = 0, it2 = 0;
  const double t1 = solve_seconds(chain(1000), &it1);
  const double t2 = solve_seconds(chain(2000), &it2);
  const double ratio = t2 / t1;
  return {ratio <= 2.5 && it1 == it2,
          "1000 nodes " + fmt("%.3f s", t1) + ", 2000 nodes " + fmt("%.3f s", t2) + " (" +
              std::to_string(it1) + "/" + std::to_string(it2) + " iterations), ratio " +
              fmt("%.2f", ratio)};
}

// --- 9: determinism -------------------------------------------------------

Outcome determinism() {
  const std::filesystem::path root = std::filesystem::path(GFUSION_TEST_TMP) / "determinism";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root);
  atomic_write(root / "scenario.cfg",
               "shape = figure8\npath_length = 400\nspeed = 4\n"
               "odom_sigma_trans_frac = 0.01\nodom_sigma_yaw = 0.002\n"
               "gps_sigma = 0.5\ngps_outlier_fraction = 0.05\ngps_write_lla = true\n"
               "mag_enabled = true\nbaro_enabled = true\nbaro_write_pressure = true\n");
  const std::vector<std::string> files = {
      "sim/truth.txt", "sim/odometry.txt", "sim/gps.txt",     "sim/mag.txt",
      "sim/baro.txt",  "sim/fuse.cfg",     "out/fused.txt",   "out/predicted.txt",
      "out/run.log",   "eval/report.txt",  "eval/report.kv"};
  std::string contents[2];
  for (int run = 0; run < 2; ++run) {
    const auto dir = root / ("run" + std::to_string(run));
    cli::simulate_command(root / "scenario.cfg", 17, dir / "sim");
    cli::fuse_command(dir / "sim" / "fuse.cfg", dir / "out");
    cli::evaluate_command(dir / "out" / "fused.txt", dir / "sim" / "truth.txt",
                          default_rpe_lengths(), dir / "eval");
    for (const auto& f : files) contents[run] += read_file(dir / f) + '\x1f';
  }
  const bool same = contents[0] == contents[1];
  return {same, std::to_string(files.size()) + " files, " +
                    std::to_string(contents[0].size()) + " bytes " +
                    (same ? "identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "drift elimination", drift_elimination},
      {2, "exact recovery", exact_recovery},
      {3, "jacobian correctness", jacobians},
      {4, "huber robustness", huber_robustness},
      {5, "yaw observability", yaw_observability},
      {6, "vertical channel", vertical_channel},
      {7, "metric oracles", metric_oracles},
      {8, "linear scaling", linear_scaling},
      {9, "determinism", determinism},
  };
  const double limits[] = {0, 0, 5.0, 10.0, 0, 0, 0, 0, 0, 0};

  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = seconds_since(start);
    if (limits[c.id] > 0.0 && elapsed >= limits[c.id]) {
      o.pass = false;
      o.detail += ", over the " + fmt("%.0f s", limits[c.id]) + " budget";
    }
    std::printf("[%s] %d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), elapsed);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
