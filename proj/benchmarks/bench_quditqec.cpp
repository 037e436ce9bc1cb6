#include <benchmark/benchmark.h>

#include "quditqec/cce_engine.hpp"
#include "quditqec/pulse_compiler.hpp"
#include "quditqec/qec_codes.hpp"
#include "quditqec/random.hpp"

using namespace quditqec;

namespace {

EffectiveCoefficients bath(int n_spins) {
  const auto params = make_qudit_params(1.0, 0.0);
  const auto geo = sample_bath_geometry(configuration_seed(1, 0), n_spins, 15.0, 3.0);
  return schrieffer_wolff_coefficients(compute_dipolar_tensors(geo, params), params);
}

std::vector<double> grid(double t_max, int points) {
  std::vector<double> t(points);
  for (int i = 0; i < points; ++i) t[i] = t_max * i / (points - 1);
  return t;
}

}  // namespace

// One configuration of the default bath on the echo grid; arg is 2S.
void BM_EchoDecoherence(benchmark::State& state) {
  const auto co = bath(100);
  const auto t = grid(400.0, 401);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decoherence_matrix(EvolutionSchedule::echo(), co, SpinQuantum(state.range(0)), t));
  }
}
BENCHMARK(BM_EchoDecoherence)->Arg(1)->Arg(5)->Arg(9)->Unit(benchmark::kMillisecond);

void BM_FreeDecoherence(benchmark::State& state) {
  const auto co = bath(100);
  const auto t = grid(1.0, 201);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decoherence_matrix(EvolutionSchedule::free_decay(), co, SpinQuantum(state.range(0)), t));
  }
}
BENCHMARK(BM_FreeDecoherence)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_OptimizeCode(benchmark::State& state) {
  const SpinQuantum s(state.range(0));
  const auto L = decoherence_matrix(EvolutionSchedule::echo(), bath(100), s, {0.0, 5.0});
  for (auto _ : state) benchmark::DoNotOptimize(optimize_numerical_code(L.values[1], s, 5.0));
}
BENCHMARK(BM_OptimizeCode)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_CompileCycle(benchmark::State& state) {
  const auto plan = binomial_code_plan(SpinQuantum(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(compile_qec_cycle(plan));
}
BENCHMARK(BM_CompileCycle)->Arg(3)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
