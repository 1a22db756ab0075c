// Microbenchmarks for the hot paths: swarm stepping, the backward exit-time
// solvers, the forward transport kernels and the 2-D KS metric. Grids are
// deliberately coarse so a full sweep stays in the seconds range; the point
// is relative cost tracking, not production accuracy.
#include <benchmark/benchmark.h>

#include <utility>
#include <vector>

#include "vjsim/agents.hpp"
#include "vjsim/exit_time.hpp"
#include "vjsim/stats.hpp"
#include "vjsim/transport_fvm.hpp"

namespace {

using namespace vjsim;

Arena closed_arena() {
  Arena arena;
  arena.target_open = false;
  return arena;
}

void BM_AgentStep(benchmark::State& state) {
  const bool spheres = state.range(0) != 0;
  const PhysicalParams phys;
  const Arena arena = closed_arena();
  SimMode mode;
  mode.collisions = spheres ? CollisionMode::HardSphere : CollisionMode::Point;
  mode.turning = TurningMode::FiniteOmega;
  SplitMix64 rng(42);
  std::vector<AgentState> agents = init_pen(arena, 16, 5.0, phys, mode.turning, 0.1, rng);
  double t = 0.0;
  for (auto _ : state) {
    step(agents, t, 0.1, mode, phys, arena, nullptr, rng);
    t += 0.1;
  }
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_AgentStep)->Arg(0)->Arg(1)->ArgNames({"spheres"});

void BM_ClassicalExitSolve(benchmark::State& state) {
  const PhysicalParams phys;
  const Arena arena;
  NumericalParams num;
  num.dx = arena.Lx / static_cast<double>(state.range(0));
  num.n_theta = 12;
  num.solver_tol = 1e-8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_met_classical(phys, arena, num));
  }
}
BENCHMARK(BM_ClassicalExitSolve)->Arg(50)->Arg(100)->ArgNames({"nx"});

void BM_DelayedExitSolve(benchmark::State& state) {
  const PhysicalParams phys;
  const Arena arena;
  NumericalParams num;
  num.dx = arena.Lx / static_cast<double>(state.range(0));
  num.n_theta = 12;
  num.solver_tol = 1e-8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_met_delayed(phys, arena, num));
  }
}
BENCHMARK(BM_DelayedExitSolve)->Arg(50)->Arg(100)->ArgNames({"nx"});

void BM_ForwardTransport(benchmark::State& state) {
  const PhysicalParams phys;
  const Arena arena = closed_arena();
  NumericalParams num;
  num.dx = arena.Lx / 40.0;
  num.n_theta = 8;
  num.dt = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_classical(phys, arena, num, 1.0, 1.0));
  }
}
BENCHMARK(BM_ForwardTransport);

void BM_RestingTransport(benchmark::State& state) {
  const PhysicalParams phys;
  const Arena arena = closed_arena();
  NumericalParams num;
  num.dx = arena.Lx / 40.0;
  num.n_theta = 8;
  num.dt = num.derived_d_eta(phys);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_resting_state(phys, arena, num, 1.0, 1.0));
  }
}
BENCHMARK(BM_RestingTransport);

Sample2D synthetic_cloud(std::uint64_t seed, std::size_t n) {
  SplitMix64 rng(seed);
  Sample2D s;
  s.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    s.points.emplace_back(rng.uniform(), rng.uniform());
  return s;
}

void BM_PeacockKs(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Sample2D a = synthetic_cloud(7, n);
  const Sample2D b = synthetic_cloud(8, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ks2d_peacock(a, b));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_PeacockKs)->Arg(1000)->Arg(4000)->ArgNames({"points"});

}  // namespace

BENCHMARK_MAIN();
