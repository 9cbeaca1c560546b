#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "fsav/model.hpp"
#include "fsav/spectral.hpp"
#include "fsav/stepper.hpp"

using namespace fsav;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Grid2D grid_of(const benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  return Grid2D(n, n, kTwoPi, kTwoPi);
}

SpectralField2D sample_field(const Grid2D& g) {
  return forward(RealField2D::sample(g, [](double x, double y) {
    return std::sin(2.0 * y) + 0.1 * std::sin(x) * std::cos(3.0 * y);
  }));
}

void BM_ForwardInverse(benchmark::State& state) {
  const Grid2D g = grid_of(state);
  const SpectralField2D w = sample_field(g);
  for (auto _ : state) {
    RealField2D r = inverse(w);
    benchmark::DoNotOptimize(forward(r));
  }
}

void BM_Jacobian(benchmark::State& state) {
  const Grid2D g = grid_of(state);
  const SpectralField2D w = sample_field(g);
  const SpectralField2D psi = inv_neg_laplacian(w);
  for (auto _ : state) benchmark::DoNotOptimize(jacobian(psi, w));
}

void BM_Step(benchmark::State& state) {
  SchemeConfig cfg;
  cfg.grid = grid_of(state);
  cfg.k = 0.01;
  cfg.re = 100.0;
  cfg.forcing.kind = ForcingKind::kolmogorov;
  cfg.forcing.m = 2;
  Stepper st(cfg);
  SolverState s = st.initial_state(sample_field(cfg.grid));
  st.advance(s);
  for (auto _ : state) benchmark::DoNotOptimize(st.advance(s));
}

}  // namespace

BENCHMARK(BM_ForwardInverse)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Jacobian)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Step)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
