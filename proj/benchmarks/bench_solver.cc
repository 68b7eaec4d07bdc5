#include <benchmark/benchmark.h>

#include "g2sfusion/config.h"
#include "g2sfusion/g2s.h"
#include "g2sfusion/solver.h"
#include "g2sfusion/synth.h"

using namespace g2sfusion;

namespace {

// Drifting synthetic scenario with a G2S translation claim every 5 frames.
FusionProblem drift_problem(double length) {
  const RunConfig c = preset("synthetic");
  ScenarioConfig sc = c.scenario;
  sc.length = length;
  sc.seed = 3;
  const Scenario s = generate_scenario(sc);
  FusionProblem p = FusionProblem::from_trajectory(s.slam, s.edges, c.pipeline.solver);
  for (std::size_t k = 5; k < s.slam.size(); k += 5) {
    const int f = static_cast<int>(k);
    const G2SDelta d = extract_delta(s.slam.pose(k), s.gt.pose(k), f);
    p.g2s_translations.push_back({f, s.slam.pose(k), Vec3(d.x, d.y, 0)});
    p.g2s_rotations.push_back({f, s.slam.pose(k).rotation, rot_z(d.theta)});
  }
  return p;
}

void BM_GaussNewton(benchmark::State& state) {
  const FusionProblem p = drift_problem(static_cast<double>(state.range(0)));
  SolverWorkspace ws;
  for (auto _ : state) benchmark::DoNotOptimize(gauss_newton_solve(p, &ws));
  state.SetLabel(std::to_string(p.nodes.size()) + " nodes");
}
BENCHMARK(BM_GaussNewton)->Arg(100)->Arg(400)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_MarginalCovariances(benchmark::State& state) {
  const FusionProblem p = drift_problem(static_cast<double>(state.range(0)));
  const FusionState s = gauss_newton_solve(p).state;
  for (auto _ : state) benchmark::DoNotOptimize(marginal_xy_covariances(p, s));
  state.SetLabel(std::to_string(p.nodes.size()) + " nodes");
}
BENCHMARK(BM_MarginalCovariances)->Arg(100)->Arg(400)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
