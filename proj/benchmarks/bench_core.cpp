#include <random>

#include <benchmark/benchmark.h>

#include "spintrace/classical.hpp"
#include "spintrace/floquet.hpp"
#include "spintrace/quantum.hpp"
#include "spintrace/symplectic.hpp"

using namespace spintrace;

namespace {

HamiltonianSpec coupled_tops() {
  HamiltonianSpec s;
  s.add(1.0, {{1, 3}});
  s.add(1.0, {{2, 3}});
  s.add(3.0, {{1, 1}, {2, 1}});
  return s;
}

void BM_ExactSpectrum(benchmark::State& state) {
  const int twice_j = static_cast<int>(state.range(0));
  const auto spec = coupled_tops();
  const ModelContext ctx(2, twice_j, 1.0 / (0.5 * twice_j + 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(exact_spectrum(spec, ctx));
  state.SetLabel("dim " + std::to_string(ctx.hilbert_dim()));
}
BENCHMARK(BM_ExactSpectrum)->Arg(10)->Arg(20)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_EvolveWithTangent(benchmark::State& state) {
  const ClassicalHamiltonian h(coupled_tops(), ModelContext::with_fixed_j_class(2, 10, 1.0));
  const auto start = ClassicalState::from_angles(std::vector<double>{2.0, 1.0},
                                                 std::vector<double>{0.1, 0.5});
  EvolveOptions o;
  o.with_tangent = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(evolve(h, start, 5.0, o));
}
BENCHMARK(BM_EvolveWithTangent)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_QSymbol(benchmark::State& state) {
  const ModelContext ctx(2, 20, 0.1);
  const auto spec = coupled_tops();
  const std::vector<cplx> u{cplx(0.3, 0.2), cplx(-0.5, 0.1)}, v{cplx(0.3, -0.2), cplx(-0.5, -0.1)};
  for (auto _ : state) benchmark::DoNotOptimize(q_symbol(spec, u, v, ctx));
}
BENCHMARK(BM_QSymbol);

void BM_ThreeDets(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const int n = static_cast<int>(state.range(0));
  const CMatrix m = random_symplectic(n, rng, 0.6 / std::sqrt(n));
  for (auto _ : state) benchmark::DoNotOptimize(three_dets_residual(m));
}
BENCHMARK(BM_ThreeDets)->Arg(1)->Arg(5)->Arg(10);

void BM_FloquetBuild(benchmark::State& state) {
  DrivenModel m;
  m.smooth.add(kPi / 2, {{1, 2}});
  m.kick.add(4.0, {{1, 3}, {1, 3}});
  const auto ctx = ModelContext::with_fixed_j_class(1, static_cast<int>(state.range(0)), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(floquet_spectrum(build_floquet(m, ctx)));
}
BENCHMARK(BM_FloquetBuild)->Arg(40)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_MapApply(benchmark::State& state) {
  DrivenModel m;
  m.smooth.add(kPi / 2, {{1, 2}});
  m.kick.add(4.0, {{1, 3}, {1, 3}});
  const StroboscopicMap map(m, ModelContext::with_fixed_j_class(1, 40, 1.0));
  const auto start = ClassicalState::from_angles(std::vector<double>{1.9}, std::vector<double>{-0.7});
  EvolveOptions o;
  o.with_tangent = true;
  for (auto _ : state) benchmark::DoNotOptimize(map.apply(start, 3, o));
}
BENCHMARK(BM_MapApply)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
