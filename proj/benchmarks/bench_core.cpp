#include <benchmark/benchmark.h>

#include "distilkit/distilkit.hpp"

using namespace distilkit;

namespace {

BipartiteState make(Family f, std::size_t d, double p = 0.0, std::optional<std::uint64_t> seed = {}) {
  StateFamilySpec spec;
  spec.family = f;
  spec.d = d;
  spec.p = p;
  return construct_state(spec, seed);
}

void BM_PartialTranspose(benchmark::State& st) {
  const BipartiteState rho = make(Family::random_mixed, static_cast<std::size_t>(st.range(0)), 0.0, 1);
  for (auto _ : st) benchmark::DoNotOptimize(partial_transpose(rho));
}
BENCHMARK(BM_PartialTranspose)->Arg(2)->Arg(4)->Arg(8);

void BM_F2Werner(benchmark::State& st) {
  const BipartiteState w = make(Family::werner, static_cast<std::size_t>(st.range(0)), 0.75);
  for (auto _ : st) benchmark::DoNotOptimize(f2(w, {4, 200, 1e-9, 0}).value);
}
BENCHMARK(BM_F2Werner)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_Symmetrize(benchmark::State& st) {
  const std::size_t pairs = static_cast<std::size_t>(st.range(0));
  Rng rng = make_rng(3);
  std::size_t n = 1;
  for (std::size_t i = 0; i < pairs; ++i) n *= 4;
  const BipartiteState rho(Dims{2, 2, pairs}, random_density(n, n, rng));
  for (auto _ : st) benchmark::DoNotOptimize(symmetrize(rho));
}
BENCHMARK(BM_Symmetrize)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Pipeline(benchmark::State& st) {
  const BipartiteState phi = make(Family::max_entangled, 2);
  PipelineOptions opt;
  opt.shots = static_cast<std::size_t>(st.range(0));
  opt.seed = 1;
  for (auto _ : st) benchmark::DoNotOptimize(estimation_pipeline(phi, opt).f_m);
}
BENCHMARK(BM_Pipeline)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_ActivationSearch(benchmark::State& st) {
  const BipartiteState sigma = make(Family::max_entangled, 4);
  ActivatorOptions opt;
  opt.budget = static_cast<std::size_t>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(search_activator(sigma, opt).witness);
}
BENCHMARK(BM_ActivationSearch)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
