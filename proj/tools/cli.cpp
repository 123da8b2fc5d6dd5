#include "cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "gfusion/config.hpp"
#include "gfusion/errors.hpp"
#include "gfusion/evaluation.hpp"
#include "gfusion/io.hpp"
#include "gfusion/pipeline.hpp"
#include "gfusion/simulate.hpp"

namespace gfusion::cli {
namespace {

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw DataError("cannot create output directory " + dir.string());
  }
}

std::string vector_text(const Eigen::Vector3d& v) {
  return format_double(v.x()) + ' ' + format_double(v.y()) + ' ' + format_double(v.z());
}

// Fuse config matching a simulated dataset.
std::string fuse_template(const Scenario& s) {
  std::string out = "# generated by gfusion simulate\n";
  out += "odometry = odometry.txt\n";
  if (s.gps.enabled) {
    out += "gps = gps.txt\n";
    out += "gps_base_sigma = " + format_double(std::max(s.gps.sigma, 1e-3)) + "\n";
  }
  if (s.mag.enabled) {
    out += "mag = mag.txt\n";
    out += "mag_reference = " + vector_text(s.mag.reference.world_field) + "\n";
    const auto& q = s.mag.reference.body_to_sensor;
    out += "mag_extrinsic = " + format_double(q.w()) + ' ' + format_double(q.x()) + ' ' +
           format_double(q.y()) + ' ' + format_double(q.z()) + "\n";
    out += "mag_base_sigma = " + format_double(std::max(s.mag.sigma, 1e-4)) + "\n";
  }
  if (s.baro.enabled) {
    out += "baro = baro.txt\n";
    if (s.baro.write_pressure) {
      out += "baro_reference_pressure = " + format_double(s.baro.reference_pressure) + "\n";
    }
  }
  out += "keyframe_interval = " + format_double(1.0 / s.rate) + "\n";
  return out;
}

}  // namespace

void simulate_command(const std::filesystem::path& scenario_path, std::uint64_t seed,
                      const std::filesystem::path& out_dir) {
  const Scenario scenario = load_scenario(scenario_path);
  const SensorStreams streams = simulate(scenario, seed);
  ensure_directory(out_dir);
  write_trajectory(out_dir / "truth.txt", streams.truth);
  write_trajectory(out_dir / "odometry.txt", streams.odometry);
  if (scenario.gps.enabled) {
    write_gps(out_dir / "gps.txt", streams.gps,
              scenario.gps.write_lla ? GpsFrame::kLla : GpsFrame::kEnu, scenario.gps.origin);
  }
  if (scenario.mag.enabled) write_mag(out_dir / "mag.txt", streams.mag);
  if (scenario.baro.enabled) {
    BaroFile file;
    file.quantity =
        scenario.baro.write_pressure ? BaroQuantity::kPressure : BaroQuantity::kHeight;
    for (const auto& b : streams.baro) {
      file.timestamps.push_back(b.timestamp);
      file.values.push_back(scenario.baro.write_pressure
                                ? height_to_pressure(b.height, scenario.baro.reference_pressure)
                                : b.height);
    }
    write_baro(out_dir / "baro.txt", file);
  }
  atomic_write(out_dir / "fuse.cfg", fuse_template(scenario));
}

void fuse_command(const std::filesystem::path& config_path, const std::filesystem::path& out_dir) {
  const RunConfig config = load_run_config(config_path);
  const FusionSettings settings = fusion_settings(config);

  std::vector<std::pair<std::string, std::string>> digests;
  const auto digest = [&digests](const char* name, const std::filesystem::path& p) {
    digests.emplace_back(name, fnv1a64_hex(read_file(p)));
  };

  FusionInputs inputs;
  inputs.odometry = read_trajectory(config.odometry);
  digest("odometry", config.odometry);
  if (settings.use_gps) {
    GpsFile gps = read_gps(config.gps);
    inputs.gps = std::move(gps.measurements);
    inputs.gps_origin = gps.origin;
    digest("gps", config.gps);
  }
  if (settings.use_mag) {
    inputs.mag = read_mag(config.mag);
    digest("mag", config.mag);
  }
  if (settings.use_baro) {
    inputs.baro = baro_heights(read_baro(config.baro), config.baro_reference_pressure,
                               config.baro_meters_per_pascal);
    digest("baro", config.baro);
  }

  const FusionResult result = run_fusion(inputs, settings);
  ensure_directory(out_dir);
  write_trajectory(out_dir / "fused.txt", result.fused);
  write_trajectory(out_dir / "predicted.txt", result.predicted);
  atomic_write(out_dir / "run.log",
               format_run_log(result, fnv1a64_hex(read_file(config_path)), digests));
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
}

std::string evaluate_command(const std::filesystem::path& est, const std::filesystem::path& gt,
                             const std::vector<double>& rpe_lengths,
                             const std::filesystem::path& out_dir) {
  EvaluationOptions options;
  if (!rpe_lengths.empty()) options.rpe_lengths = rpe_lengths;
  for (double l : options.rpe_lengths) {
    if (!(l > 0.0)) throw ConfigError("rpe lengths must be positive");
  }
  const MetricReport report = evaluate(read_trajectory(est), read_trajectory(gt), options);
  const std::string table = format_table(report);
  ensure_directory(out_dir);
  atomic_write(out_dir / "report.txt", table);
  atomic_write(out_dir / "report.kv", format_key_values(report));
  return table;
}

void plot_command(const std::filesystem::path& out,
                  const std::vector<std::filesystem::path>& trajectories) {
  if (trajectories.empty()) throw ConfigError("plot needs at least one trajectory");
  const Trajectory reference = read_trajectory(trajectories.front());
  std::string table = "# series t x y z\n";
  std::string legend = "# series name path aligned_to\n";
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const auto& path = trajectories[k];
    const Trajectory traj = k == 0 ? reference : read_trajectory(path);
    AlignmentTransform align;
    if (k > 0) align = align_trajectories(traj, reference);
    for (const auto& s : traj) {
      const Eigen::Vector3d p = align.apply(s.pose.position);
      table += std::to_string(k) + ' ' + format_double(s.timestamp) + ' ' + vector_text(p) + '\n';
    }
    legend += std::to_string(k) + ' ' + path.stem().string() + ' ' + path.string() + ' ' +
              (k == 0 ? std::string("-") : "0") + '\n';
  }
  if (out.has_parent_path()) ensure_directory(out.parent_path());
  atomic_write(out, table);
  std::filesystem::path legend_path = out;
  legend_path += ".legend";
  atomic_write(legend_path, legend);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Global pose fusion of odometry with GPS, magnetometer and barometer"};
  app.require_subcommand(1);

  std::string scenario, config, est, gt, out_path;
  std::uint64_t seed = 0;
  std::vector<double> rpe_lengths;
  std::vector<std::string> plot_inputs;

  auto* sim = app.add_subcommand("simulate", "Generate synthetic sensor streams");
  sim->add_option("--scenario", scenario, "Scenario file")->required();
  sim->add_option("--seed", seed, "Random seed")->required();
  sim->add_option("--out", out_path, "Output directory")->required();

  auto* fuse = app.add_subcommand("fuse", "Fuse odometry with global measurements");
  fuse->add_option("--config", config, "Run configuration file")->required();
  fuse->add_option("--out", out_path, "Output directory")->required();

  auto* eval = app.add_subcommand("evaluate", "ATE and RPE against ground truth");
  eval->add_option("--est", est, "Estimated trajectory")->required();
  eval->add_option("--gt", gt, "Ground-truth trajectory")->required();
  eval->add_option("--rpe-lengths", rpe_lengths, "RPE segment lengths in m");
  eval->add_option("--out", out_path, "Output directory")->required();

  auto* plot = app.add_subcommand("plot", "Emit aligned trajectory series as a table");
  plot->add_option("--out", out_path, "Output table")->required();
  plot->add_option("trajectories", plot_inputs, "Trajectory files")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sim) {
      simulate_command(scenario, seed, out_path);
    } else if (*fuse) {
      fuse_command(config, out_path);
    } else if (*eval) {
      out << evaluate_command(est, gt, rpe_lengths, out_path);
    } else if (*plot) {
      std::vector<std::filesystem::path> paths(plot_inputs.begin(), plot_inputs.end());
      plot_command(out_path, paths);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace gfusion::cli
