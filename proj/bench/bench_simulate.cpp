#include <benchmark/benchmark.h>

#include "vtc/adjoint.hpp"
#include "vtc/builtins.hpp"
#include "vtc/forward.hpp"

namespace {

vtc::SimulationOptions options(std::size_t paths, vtc::Execution ex) {
  vtc::SimulationOptions o;
  o.paths = paths;
  o.seed = 1;
  o.execution = ex;
  return o;
}

void BM_SimulateReference(benchmark::State& state) {
  const vtc::BuiltinProblem prob = vtc::make_toy_linear_sde();
  const vtc::TimeGrid grid(1.0, 50);
  const vtc::ControlPath u = prob.reference_control(grid);
  const auto paths = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(vtc::simulate_reference(prob.spec, u, options(paths, vtc::Execution::serial)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Simulate(benchmark::State& state) {
  const vtc::BuiltinProblem prob = vtc::make_toy_linear_sde();
  const vtc::TimeGrid grid(1.0, 50);
  const vtc::ControlPath u = prob.reference_control(grid);
  const auto paths = static_cast<std::size_t>(state.range(0));
  const auto ex = state.range(1) ? vtc::Execution::parallel : vtc::Execution::serial;
  for (auto _ : state) benchmark::DoNotOptimize(vtc::simulate(prob.spec, u, options(paths, ex)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_RegressionAdjoint(benchmark::State& state) {
  const vtc::BuiltinProblem prob = vtc::make_toy_linear_sde();
  const vtc::TimeGrid grid(1.0, 50);
  const auto ex = state.range(0) ? vtc::Execution::parallel : vtc::Execution::serial;
  const vtc::Evaluation ev = vtc::evaluate(prob.spec, prob.reference_control(grid), options(20000, ex));
  for (auto _ : state) benchmark::DoNotOptimize(vtc::solve_adjoint(prob.spec, ev.ensemble, ev.terminal));
}

}  // namespace

BENCHMARK(BM_SimulateReference)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Simulate)->ArgsProduct({{10000, 100000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RegressionAdjoint)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
