// Parallel/BLAS kernels against their serial references.
#include <benchmark/benchmark.h>

#include "spiked/model.hpp"
#include "spiked/montecarlo.hpp"
#include "spiked/spectrum.hpp"

using namespace spiked;

namespace {

Eigen::MatrixXcd observations(int p) {
  const SpikeSpec spec{{7.0, 5.0, 3.0}, {1, 4, 2}, 1.0, p, 2 * p};
  return generate_isotropic(spec, 1).entries;
}

void BM_GramReference(benchmark::State& state) {
  const auto x = observations(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sample_covariance_reference(x));
}

void BM_GramBlas(benchmark::State& state) {
  const auto x = observations(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sample_covariance(x));
}

void BM_FullSpectrum(benchmark::State& state) {
  const auto s = sample_covariance(observations(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(eigenvalues_desc(s));
}

void BM_LeadingEigenvalues(benchmark::State& state) {
  const auto s = sample_covariance(observations(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(leading_eigenvalues(s, 7));
}

TrialConfig bench_config() {
  TrialConfig c;
  c.p = 200;
  c.n = 400;
  c.trials = 16;
  c.data_model = DataModel::isotropic;
  return c;
}

void BM_TrialsSerial(benchmark::State& state) {
  const TrialConfig c = bench_config();
  for (auto _ : state) benchmark::DoNotOptimize(run_trials_serial(c));
}

void BM_TrialsParallel(benchmark::State& state) {
  const TrialConfig c = bench_config();
  for (auto _ : state) benchmark::DoNotOptimize(run_trials(c, 0));
}

}  // namespace

BENCHMARK(BM_GramReference)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramBlas)->Arg(100)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FullSpectrum)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LeadingEigenvalues)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialsParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
