// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>

#include "vpseg/kernels.hpp"
#include "vpseg/ot.hpp"

using namespace vpseg;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(0.0, 4.0);
  Matrix m(r, c);
  for (double& v : m.data()) v = d(rng);
  return m;
}

template <bool Parallel>
void BM_GibbsColumns(benchmark::State& state) {
  const auto j = static_cast<std::size_t>(state.range(0));
  const Matrix k = random_matrix(4, j);
  const std::vector<double> f(4, 0.1);
  Matrix u;
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::gibbs_columns(k, f, 0.01, u);
    } else {
      kernels::serial::gibbs_columns(k, f, 0.01, u);
    }
    benchmark::DoNotOptimize(u.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(4 * j));
}

template <bool Parallel>
void BM_RowLse(benchmark::State& state) {
  const auto j = static_cast<std::size_t>(state.range(0));
  const Matrix k = random_matrix(4, j);
  const std::vector<double> f(4, 0.1);
  std::vector<double> lse(j);
  kernels::column_lse(k, f, 0.01, lse);
  for (auto _ : state) {
    auto r = Parallel ? kernels::row_lse(k, f, lse, 0.01) : kernels::serial::row_lse(k, f, lse, 0.01);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(4 * j));
}

template <bool Parallel>
void BM_GradientDivergence(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix u = random_matrix(1, n * n);
  std::vector<double> gx(n * n), gy(n * n), d(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::gradient(u.row(0), n, n, gx, gy);
      kernels::divergence(gx, gy, n, n, d);
    } else {
      kernels::serial::gradient(u.row(0), n, n, gx, gy);
      kernels::serial::divergence(gx, gy, n, n, d);
    }
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

void BM_SinkhornVolume(benchmark::State& state) {
  const auto j = static_cast<std::size_t>(state.range(0));
  const Matrix k = random_matrix(3, j);
  const auto v = VolumeSpec::from_ratios(std::vector<double>{0.2, 0.3, 0.5}, j);
  for (auto _ : state) {
    auto f = sinkhorn_volume(k, v, std::vector<double>(3, 0.0), 0.01, 10);
    benchmark::DoNotOptimize(f.data());
  }
}

}  // namespace

BENCHMARK(BM_GibbsColumns<false>)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_GibbsColumns<true>)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_RowLse<false>)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_RowLse<true>)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_GradientDivergence<false>)->Arg(64)->Arg(256);
BENCHMARK(BM_GradientDivergence<true>)->Arg(64)->Arg(256);
BENCHMARK(BM_SinkhornVolume)->Arg(1 << 16);

BENCHMARK_MAIN();
