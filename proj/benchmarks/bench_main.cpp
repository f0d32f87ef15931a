#include <benchmark/benchmark.h>

#include "mflab/coherent.hpp"
#include "mflab/generators.hpp"
#include "mflab/hartree.hpp"
#include "mflab/observe.hpp"
#include "mflab/propagate.hpp"

using namespace mflab;

namespace {

const Grid kRing(1, 6, 1.0);

SampledPotential ring_potential() { return sample_potential(PotentialSpec::coulomb_like(0.5, 1.0), kRing); }

FockState spread_state(BasisPtr b) {
  FockState psi(b);
  for (Eigen::Index i = 0; i < psi.amplitudes().size(); ++i) psi.amplitudes()[i] = complex(1.0, 0.1 * (i % 7));
  return psi.normalized();
}

}  // namespace

static void BasisEnumeration(benchmark::State& state) {
  const int cutoff = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(OccupationBasis::create(6, cutoff));
  state.counters["dim"] = static_cast<double>(OccupationBasis::total_dimension(6, cutoff));
}
BENCHMARK(BasisEnumeration)->Arg(4)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

static void AssembleHamiltonian(benchmark::State& state) {
  const auto V = ring_potential();
  const auto b = OccupationBasis::create(6, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_hamiltonian(static_cast<int>(state.range(0)), V, b));
}
BENCHMARK(AssembleHamiltonian)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void AssembleFluctuationGenerator(benchmark::State& state) {
  const auto V = ring_potential();
  const auto phi = make_initial_state(kRing, {});
  const auto b = OccupationBasis::create(6, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        assemble_L2(phi, V, b).plus(assemble_L3(phi, V, 4, b), "L23").plus(assemble_L4(V, 4, b), "L"));
  }
}
BENCHMARK(AssembleFluctuationGenerator)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void GeneratorMatvec(benchmark::State& state) {
  const auto b = OccupationBasis::create(6, static_cast<int>(state.range(0)));
  const auto H = assemble_hamiltonian(static_cast<int>(state.range(0)), ring_potential(), b);
  const FockState psi = spread_state(b);
  for (auto _ : state) benchmark::DoNotOptimize(H.apply(psi));
  state.counters["nnz"] = static_cast<double>(H.nonzeros());
}
BENCHMARK(GeneratorMatvec)->Arg(4)->Arg(8)->Arg(10);

static void KrylovPropagation(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const auto b = OccupationBasis::create(6, N);
  const auto H = assemble_hamiltonian(N, ring_potential(), b);
  const FockState psi = product_state(make_initial_state(kRing, {}), N, b);
  for (auto _ : state) benchmark::DoNotOptimize(expm_apply(H, psi, 0.5));
}
BENCHMARK(KrylovPropagation)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void HartreeStep(benchmark::State& state) {
  const Grid g(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 0.5);
  const auto V = sample_potential(PotentialSpec::coulomb_like(1.0, 1.0), g);
  HartreePropagator step(V, 1e-3);
  FieldVector phi = make_initial_state(g, {});
  for (auto _ : state) {
    step.step(phi);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(HartreeStep)->Args({1, 64})->Args({2, 32})->Args({3, 16});

static void WeylDisplacement(benchmark::State& state) {
  const auto b = OccupationBasis::create(2, 30);
  const Eigen::VectorXcd f = Eigen::VectorXcd::Constant(2, 0.7);
  const FockState vac = FockState::vacuum(b);
  for (auto _ : state) benchmark::DoNotOptimize(apply_weyl(f, vac));
}
BENCHMARK(WeylDisplacement)->Unit(benchmark::kMicrosecond);

static void ReducedDensity(benchmark::State& state) {
  const auto b = OccupationBasis::create(6, 8);
  const FockState psi = product_state(make_initial_state(kRing, {}), 8, b);
  for (auto _ : state) benchmark::DoNotOptimize(reduced_density(psi));
}
BENCHMARK(ReducedDensity)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
