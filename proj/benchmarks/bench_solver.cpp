#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "gfusion/factors.hpp"
#include "gfusion/graph.hpp"
#include "gfusion/solver.hpp"

using namespace gfusion;

namespace {

// Noisy GPS on every node of a gently curving chain, initial guess off by 1%
// in scale and heading.
GraphSnapshot make_chain(std::size_t n) {
  std::mt19937_64 rng(n);
  std::normal_distribution<double> noise;
  GraphSnapshot s;
  Pose truth, guess;
  const Pose step{{1.0, 0.0, 0.0}, UnitQuaternion::from_yaw(0.01)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<NodeId>(i);
    s.ids.push_back(id);
    s.states.push_back(guess);
    s.fixed.push_back(i == 0);
    const Eigen::Vector3d z = truth.position + 0.5 * Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
    s.factors.push_back(std::make_shared<const Factor>(
        Factor::gps(id, {z, 10, 0.0}, 0.25 * Eigen::Matrix3d::Identity(), 1.0)));
    if (i > 0) {
      s.factors.push_back(std::make_shared<const Factor>(
          Factor::local(id - 1, id, {step}, 1e-4 * Matrix6d::Identity())));
    }
    truth = truth * step;
    guess = guess * Pose{1.01 * step.position, UnitQuaternion::from_yaw(0.0105)};
  }
  return s;
}

void BM_Optimize(benchmark::State& state) {
  const GraphSnapshot chain = make_chain(static_cast<std::size_t>(state.range(0)));
  SolverOptions options;
  options.max_iterations = 10;
  options.cost_tolerance = 1e-300;
  options.gradient_tolerance = 1e-300;
  for (auto _ : state) benchmark::DoNotOptimize(optimize(chain, options));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Optimize)->RangeMultiplier(2)->Range(256, 4096)->Unit(benchmark::kMillisecond)->Complexity();

void BM_BuildLinearSystem(benchmark::State& state) {
  const GraphSnapshot chain = make_chain(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_linear_system(chain, chain.states));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildLinearSystem)->RangeMultiplier(2)->Range(256, 4096)->Unit(benchmark::kMicrosecond)->Complexity();

void BM_SolveNormalEquations(benchmark::State& state) {
  const GraphSnapshot chain = make_chain(static_cast<std::size_t>(state.range(0)));
  const LinearSystem sys = build_linear_system(chain, chain.states);
  for (auto _ : state) benchmark::DoNotOptimize(solve_normal_equations(sys, 1e-4));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveNormalEquations)->RangeMultiplier(2)->Range(256, 4096)->Unit(benchmark::kMicrosecond)->Complexity();

}  // namespace

BENCHMARK_MAIN();
