#include "mvak/extensions.hpp"
#include "mvak/parallel.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

mvak::Matrix sample(mvak::Index rows, mvak::Index cols) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  mvak::Matrix m(rows, cols);
  for (mvak::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

void BM_RbfGram(benchmark::State& state) {
  const mvak::Matrix a = sample(state.range(0), 16);
  for (auto _ : state) benchmark::DoNotOptimize(mvak::par::rbf_gram(a, a, 2.0));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_RbfGramSerial(benchmark::State& state) {
  const mvak::Matrix a = sample(state.range(0), 16);
  for (auto _ : state) benchmark::DoNotOptimize(mvak::par::rbf_gram_serial(a, a, 2.0));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_Pairwise(benchmark::State& state) {
  const mvak::Matrix a = sample(state.range(0), 16);
  for (auto _ : state) benchmark::DoNotOptimize(mvak::par::pairwise_distances(a));
}

void BM_PairwiseSerial(benchmark::State& state) {
  const mvak::Matrix a = sample(state.range(0), 16);
  for (auto _ : state) benchmark::DoNotOptimize(mvak::par::pairwise_distances_serial(a));
}

void BM_FitRkOpls(benchmark::State& state) {
  const mvak::Index l = state.range(0);
  const mvak::Matrix x = sample(l, 8);
  mvak::Matrix y = mvak::Matrix::Zero(l, 3);
  for (mvak::Index i = 0; i < l; ++i) y(i, (x(i, 0) > 0) + (x(i, 1) > 0)) = 1.0;
  mvak::RkOptions o;
  o.r = 100;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        mvak::fit_rk(mvak::ReducedMethod::RKOPLS, mvak::Kernel::rbf(2.0), x, y, 2, true, o));
  state.SetItemsProcessed(state.iterations() * l * o.r);
}

}  // namespace

BENCHMARK(BM_RbfGram)->Arg(256)->Arg(1024)->Arg(2048);
BENCHMARK(BM_RbfGramSerial)->Arg(256)->Arg(1024)->Arg(2048);
BENCHMARK(BM_Pairwise)->Arg(256)->Arg(1024)->Arg(2048);
BENCHMARK(BM_PairwiseSerial)->Arg(256)->Arg(1024)->Arg(2048);
BENCHMARK(BM_FitRkOpls)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
