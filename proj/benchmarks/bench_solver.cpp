// Microbenchmarks for the solver hot paths: operator assembly, banded
// solves, chaos-affine forward sweeps, the Riccati recursion, and the
// exhaustive-tree backward solver.

#include <slqheat/slqheat.hpp>

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

namespace {

using namespace slqheat;

constexpr double kPi = 3.14159265358979323846;

void BM_Assemble(benchmark::State& state) {
  const int n_cells = static_cast<int>(state.range(0));
  const Mesh1D mesh = build_mesh(1.0, n_cells);
  for (auto _ : state) {
    FemOperators ops = assemble(mesh, 1.0 / 64.0);
    benchmark::DoNotOptimize(ops.n_dof);
  }
  state.SetComplexityN(n_cells);
}
BENCHMARK(BM_Assemble)
    ->RangeMultiplier(4)
    ->Range(64, 4096)
    ->Complexity(benchmark::oN);

void BM_ShiftedSolve(benchmark::State& state) {
  const int n_cells = static_cast<int>(state.range(0));
  const FemOperators ops = assemble(build_mesh(1.0, n_cells), 1.0 / 64.0);
  const Vec rhs = Vec::LinSpaced(ops.n_dof, -1.0, 1.0);
  for (auto _ : state) {
    Vec x = ops.solve_shifted(rhs);
    benchmark::DoNotOptimize(x.data());
  }
  state.SetComplexityN(n_cells);
}
BENCHMARK(BM_ShiftedSolve)
    ->RangeMultiplier(4)
    ->Range(64, 4096)
    ->Complexity(benchmark::oN);

ForwardData make_forward(const FemOperators& ops, const TimeGrid& grid) {
  ForwardData data;
  data.ops = &ops;
  data.grid = grid;
  data.X0 = project_p1(ops, [](double x) { return x * (1.0 - x); });
  data.sigma.assign(
      grid.N, project_p1(ops, [](double x) { return std::sin(kPi * x); }));
  return data;
}

void BM_ForwardChaos(benchmark::State& state) {
  const int n_steps = static_cast<int>(state.range(0));
  const TimeGrid grid = build_grid(1.0, n_steps);
  const FemOperators ops = assemble(build_mesh(1.0, 64), grid.tau);
  const ForwardData data = make_forward(ops, grid);
  for (auto _ : state) {
    ChaosProcess X = solve_forward_chaos(data);
    benchmark::DoNotOptimize(X.mean.back().data());
  }
  state.SetComplexityN(n_steps);
}
BENCHMARK(BM_ForwardChaos)
    ->RangeMultiplier(4)
    ->Range(16, 256)
    ->Complexity(benchmark::oNSquared);

void BM_ForwardPaths(benchmark::State& state) {
  const int n_paths = static_cast<int>(state.range(0));
  const TimeGrid grid = build_grid(1.0, 64);
  const FemOperators ops = assemble(build_mesh(1.0, 64), grid.tau);
  const ForwardData data = make_forward(ops, grid);
  const NoiseEnsemble noise = sample_ensemble(grid, n_paths, 12345);
  for (auto _ : state) {
    PathProcess X = solve_forward_paths(data, noise.increments);
    benchmark::DoNotOptimize(X.values.back().data());
  }
  state.SetComplexityN(n_paths);
}
BENCHMARK(BM_ForwardPaths)
    ->RangeMultiplier(4)
    ->Range(256, 4096)
    ->Complexity(benchmark::oN);

void BM_Riccati(benchmark::State& state) {
  const int n_cells = static_cast<int>(state.range(0));
  const TimeGrid grid = build_grid(1.0, 64);
  const FemOperators ops = assemble(build_mesh(1.0, n_cells), grid.tau);
  ControlProblem problem;
  problem.ops = &ops;
  problem.grid = grid;
  problem.alpha = 1.0;
  problem.X0 = project_p1(ops, [](double x) { return x * (1.0 - x); });
  problem.sigma.assign(grid.N, Vec());
  problem.xtilde.assign(grid.N + 1, Vec::Zero(ops.n_dof));
  for (auto _ : state) {
    RiccatiSolution ric = solve_riccati(problem);
    benchmark::DoNotOptimize(ric.P.front().data());
  }
  state.SetComplexityN(n_cells);
}
BENCHMARK(BM_Riccati)
    ->RangeMultiplier(2)
    ->Range(8, 64)
    ->Complexity(benchmark::oNCubed);

void BM_TreeBackward(benchmark::State& state) {
  const int n_steps = static_cast<int>(state.range(0));
  const TimeGrid grid = build_grid(1.0, n_steps);
  const FemOperators ops = assemble(build_mesh(1.0, 8), grid.tau);
  const ForwardData data = make_forward(ops, grid);
  const BernoulliTree tree = enumerate_tree(grid);
  const PathProcess X = solve_forward_paths(data, tree.increments());
  const Mat terminal = -X.values.back();
  for (auto _ : state) {
    BackwardPaths bp = solve_backward_tree(ops, tree, terminal, nullptr);
    benchmark::DoNotOptimize(bp.Y.values.front().data());
  }
}
BENCHMARK(BM_TreeBackward)->DenseRange(6, 12, 2);

}  // namespace

BENCHMARK_MAIN();
