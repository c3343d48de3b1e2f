// Generator evaluation: dense serial reference against the structured
// OpenMP kernel, plus one full mean-field RK4 step.

#include <benchmark/benchmark.h>

#include "lasersim/closed_forms.hpp"
#include "lasersim/kernels.hpp"
#include "lasersim/lindblad.hpp"

namespace {

using namespace lasersim;

const LaserParams kParams = LaserParams::from_decay(1.0, 1.0, 0.5, 2.0);

DensityMatrix sample_state(int n_max) {
  const SpaceSpec space = make_space(n_max);
  return limit_cycle_state(kParams, 0.0, 0.7, space);
}

GeneratorCoefficients sample_coefficients() {
  GeneratorCoefficients c;
  c.kappa = kParams.kappa();
  c.gamma = kParams.gamma();
  c.d = kParams.d();
  c.omega = 0.3;
  c.alpha = {0.2, -0.1};
  c.beta = {0.05, 0.3};
  return c;
}

void BM_Reference(benchmark::State& st) {
  const DensityMatrix rho = sample_state(static_cast<int>(st.range(0)));
  const OperatorSet ops = make_operators(rho.space);
  const GeneratorCoefficients c = sample_coefficients();
  for (auto _ : st) {
    CMatrix out = reference::apply_generator(rho.entries, ops, c);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_Kernel(benchmark::State& st) {
  const DensityMatrix rho = sample_state(static_cast<int>(st.range(0)));
  const GeneratorCoefficients c = sample_coefficients();
  const int threads = static_cast<int>(st.range(1));
  const int saved = kernels::thread_limit();
  kernels::set_thread_limit(threads);
  CMatrix out;
  for (auto _ : st) {
    kernels::apply_generator(rho.entries, rho.space, c, out);
    benchmark::DoNotOptimize(out.data());
  }
  kernels::set_thread_limit(saved);
}

void BM_MeanFieldStep(benchmark::State& st) {
  const DensityMatrix rho = sample_state(static_cast<int>(st.range(0)));
  const Generator gen = Generator::mean_field(kParams, true);
  for (auto _ : st) {
    CMatrix x = propagate(rho.entries, gen, rho.space, 0.0, 0.01, 0.01);
    benchmark::DoNotOptimize(x.data());
  }
}

}  // namespace

BENCHMARK(BM_Reference)->Arg(8)->Arg(16)->Arg(24)->Arg(48)->Arg(96);
BENCHMARK(BM_Kernel)->ArgsProduct({{8, 16, 24, 48, 96}, {1, 2, 4}});
BENCHMARK(BM_MeanFieldStep)->Arg(24)->Arg(48);

BENCHMARK_MAIN();
