#include <benchmark/benchmark.h>
#include <omp.h>

#include "lego/learn.hpp"
#include "lego/pipeline.hpp"

using namespace lego;

namespace {

struct Population {
  SimContext ctx = default_context();
  std::vector<TrainingCase> cases;
  std::vector<ParamVector> seeds;

  Population() {
    cases = make_cases(ctx, TwistMode::disassemble, {1, 2}, {Support::solid, 1},
                       training_positions(ctx.plate), 1);
    OptimizerState s = cmaes_init({4.0, 11.0, 0.5, 9.0}, 0.05, Bounds{}, 8, 2);
    seeds = ask(s);
  }
};

void population(benchmark::State& state, ControllerKind c, bool parallel) {
  Population p;
  const CostWeights w = default_weights(c);
  for (auto _ : state) {
    auto costs = parallel ? evaluate_population(p.ctx, p.cases, TwistMode::disassemble, c, p.seeds, w)
                          : evaluate_population_serial(p.ctx, p.cases, TwistMode::disassemble, c,
                                                       p.seeds, w);
    benchmark::DoNotOptimize(costs.data());
  }
  state.counters["attempts/s"] = benchmark::Counter(
      static_cast<double>(p.seeds.size() * p.cases.size()), benchmark::Counter::kIsIterationInvariantRate);
}

EvaluationConfig sweep_config() {
  EvaluationConfig e;
  e.kinds = {{1, 2}, {2, 4}};
  e.trials_per_position = 2;
  e.params = ParamTable::initial();
  e.rng_seed = 3;
  return e;
}

void sweep(benchmark::State& state, bool parallel) {
  const SimContext ctx = default_context();
  const EvaluationConfig e = sweep_config();
  for (auto _ : state) {
    SuccessTable t = parallel ? run_success_sweep(ctx, e) : run_success_sweep_serial(ctx, e);
    benchmark::DoNotOptimize(t.rows.data());
  }
}

void grid(benchmark::State& state, bool parallel) {
  const SimContext ctx = default_context();
  auto cases = make_cases(ctx, TwistMode::assemble, {1, 2}, {Support::solid, 1},
                          training_positions(ctx.plate), 1);
  const GridSpec coarse{0.5, 4.0, 2.0, 2.0};
  for (auto _ : state) {
    GridResult g = grid_search(ctx, cases, TwistMode::assemble, Bounds{}, CostWeights{}, coarse, parallel);
    benchmark::DoNotOptimize(g.best_cost);
  }
}

}  // namespace

BENCHMARK_CAPTURE(population, joint_serial, ControllerKind::joint_jpc, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(population, joint_parallel, ControllerKind::joint_jpc, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(population, cartesian_serial, ControllerKind::cartesian_jpc, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(population, cartesian_parallel, ControllerKind::cartesian_jpc, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sweep, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sweep, parallel, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(grid, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(grid, parallel, true)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
}
