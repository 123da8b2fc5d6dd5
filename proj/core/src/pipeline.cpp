#include "gfusion/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>

#include "gfusion/errors.hpp"
#include "gfusion/io.hpp"

namespace gfusion {
namespace {

enum class Stream { kOdometry = 0, kGps = 1, kMag = 2, kBaro = 3 };

struct Event {
  double t;
  Stream stream;
  std::size_t index;

  bool operator<(const Event& o) const {
    if (t != o.t) return t < o.t;
    if (stream != o.stream) return stream < o.stream;
    return index < o.index;
  }
};

FactorCounts count_factors(const PoseGraph& graph) {
  return {graph.factor_count(FactorKind::kLocal), graph.factor_count(FactorKind::kGps),
          graph.factor_count(FactorKind::kMag), graph.factor_count(FactorKind::kBaro)};
}

}  // namespace

FusionSettings fusion_settings(const RunConfig& config) {
  FusionSettings s;
  s.graph = config.graph;
  s.solver = config.solver;
  s.optimization_period = config.optimization_period;
  s.use_gps = config.use_gps && !config.gps.empty();
  s.use_mag = config.use_mag && !config.mag.empty();
  s.use_baro = config.use_baro && !config.baro.empty();
  s.baro_window = config.baro_window;
  s.baro_default_variance = config.baro_default_variance;
  return s;
}

FusionResult run_fusion(const FusionInputs& inputs, const FusionSettings& settings) {
  if (inputs.odometry.empty()) throw ConfigError("fuse needs a non-empty odometry stream");
  if (!(settings.optimization_period > 0.0)) {
    throw ConfigError("optimization period must be > 0");
  }
  settings.solver.validate();

  FusionResult result;
  const bool any_global = (settings.use_gps && !inputs.gps.empty()) ||
                          (settings.use_mag && !inputs.mag.empty()) ||
                          (settings.use_baro && !inputs.baro.empty());
  if (!any_global) {
    result.warnings.push_back(
        "no global measurements enabled; output follows odometry only");
  }

  std::vector<Event> events;
  events.reserve(inputs.odometry.size() + inputs.gps.size() + inputs.mag.size() +
                 inputs.baro.size());
  for (std::size_t i = 0; i < inputs.odometry.size(); ++i) {
    events.push_back({inputs.odometry[i].timestamp, Stream::kOdometry, i});
  }
  if (settings.use_gps) {
    for (std::size_t i = 0; i < inputs.gps.size(); ++i) {
      events.push_back({inputs.gps[i].timestamp, Stream::kGps, i});
    }
  }
  if (settings.use_mag) {
    for (std::size_t i = 0; i < inputs.mag.size(); ++i) {
      events.push_back({inputs.mag[i].timestamp, Stream::kMag, i});
    }
  }
  if (settings.use_baro) {
    for (std::size_t i = 0; i < inputs.baro.size(); ++i) {
      events.push_back({inputs.baro[i].timestamp, Stream::kBaro, i});
    }
  }
  std::sort(events.begin(), events.end());

  PoseGraph graph(settings.graph);
  if (inputs.gps_origin) graph.set_enu_origin(*inputs.gps_origin);
  FrameTransform transform;  // world == local until the first optimization
  std::deque<double> baro_window;
  std::vector<GraphNode> finished;

  const auto run_cycle = [&](double data_time) {
    CycleReport report;
    report.index = static_cast<int>(result.cycles.size());
    report.data_time = data_time;
    report.trimmed = graph.trim_window();
    for (auto& n : graph.take_trimmed()) finished.push_back(std::move(n));
    report.nodes = graph.nodes().size();
    report.factors = count_factors(graph);
    const GraphSnapshot snap = graph.snapshot();
    const bool any_free = std::find(snap.fixed.begin(), snap.fixed.end(), false) != snap.fixed.end();
    if (any_free) {
      const SolverResult solved = optimize(snap, settings.solver);
      graph.apply(snap.ids, solved.states);
      report.optimized = true;
      report.solver = solved.report;
    }
    if (!graph.nodes().empty()) {
      const GraphNode& latest = graph.nodes().back();
      transform = frame_transform(latest, latest.local_pose);
    }
    result.cycles.push_back(report);
  };

  const double start = events.front().t;
  double next_cycle = start + settings.optimization_period;
  for (const Event& e : events) {
    if (e.t > next_cycle) {
      run_cycle(next_cycle);
      while (next_cycle < e.t) next_cycle += settings.optimization_period;
    }
    switch (e.stream) {
      case Stream::kOdometry: {
        const TimedPose& s = inputs.odometry[e.index];
        graph.add_odometry(s.pose, s.timestamp);
        result.predicted.push_back(s.timestamp, predict_global(s.pose, transform));
        break;
      }
      case Stream::kGps:
        graph.attach_global(inputs.gps[e.index], e.t);
        break;
      case Stream::kMag:
        graph.attach_global(inputs.mag[e.index], e.t);
        break;
      case Stream::kBaro: {
        const BaroSample& b = inputs.baro[e.index];
        baro_window.push_back(b.height);
        while (baro_window.size() > settings.baro_window) baro_window.pop_front();
        const std::vector<double> window(baro_window.begin(), baro_window.end());
        graph.attach_global(
            BaroMeasurement{b.height, baro_variance(window, settings.baro_default_variance), b.timestamp},
            e.t);
        break;
      }
    }
  }
  graph.flush_pending();
  run_cycle(events.back().t);

  for (const auto& n : finished) result.fused.push_back(n.timestamp, n.state);
  for (const auto& n : graph.nodes()) result.fused.push_back(n.timestamp, n.state);
  result.gps = graph.counters(FactorKind::kGps);
  result.mag = graph.counters(FactorKind::kMag);
  result.baro = graph.counters(FactorKind::kBaro);
  return result;
}

std::string format_run_log(const FusionResult& result, const std::string& config_hash,
                           const std::vector<std::pair<std::string, std::string>>& digests) {
  std::string out = "# gfusion fuse log\n";
  out += "config_fnv1a64 " + config_hash + "\n";
  for (const auto& [name, digest] : digests) out += "input " + name + " fnv1a64 " + digest + "\n";
  for (const auto& w : result.warnings) out += "warning " + w + "\n";
  char buf[512];
  for (const auto& c : result.cycles) {
    std::snprintf(buf, sizeof buf,
                  "cycle %d t=%.6f nodes=%zu trimmed=%zu factors local=%zu gps=%zu mag=%zu "
                  "baro=%zu",
                  c.index, c.data_time, c.nodes, c.trimmed, c.factors.local, c.factors.gps,
                  c.factors.mag, c.factors.baro);
    out += buf;
    if (c.optimized) {
      std::snprintf(buf, sizeof buf,
                    " iterations=%d rejected=%d initial_cost=%.9g final_cost=%.9g "
                    "gradient=%.3e reason=%s",
                    c.solver.iterations, c.solver.rejected_steps, c.solver.initial_cost,
                    c.solver.final_cost, c.solver.gradient_norm, to_string(c.solver.reason));
      out += buf;
    } else {
      out += " skipped=all_fixed";
    }
    out += '\n';
  }
  const auto counters = [&](const char* name, const MeasurementCounters& m) {
    std::snprintf(buf, sizeof buf, "measurements %s attached=%zu dropped=%zu rejected=%zu\n",
                  name, m.attached, m.dropped, m.rejected);
    out += buf;
  };
  counters("gps", result.gps);
  counters("mag", result.mag);
  counters("baro", result.baro);
  std::snprintf(buf, sizeof buf, "output fused=%zu predicted=%zu\n", result.fused.size(),
                result.predicted.size());
  out += buf;
  return out;
}

}  // namespace gfusion
