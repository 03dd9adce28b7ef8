// Serial reference vs OpenMP kernels on retrieval-sized inputs.
// Set OMP_NUM_THREADS to compare thread counts.

#include <benchmark/benchmark.h>

#include <random>

#include "xanchor/kernels.hpp"

using namespace xanchor;

namespace {

RowMatrix random_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  RowMatrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return kernels::normalized_rows(m);
}

template <auto Fn>
void topk_mean(benchmark::State& st) {
  const auto n = st.range(0);
  const auto a = random_rows(n, 64, 1), b = random_rows(n, 64, 2);
  for (auto _ : st) benchmark::DoNotOptimize(Fn(a, b, 10));
  st.SetItemsProcessed(st.iterations() * n * n);
}

template <auto Fn>
void topk_scores(benchmark::State& st) {
  const auto n = st.range(0);
  const auto a = random_rows(n, 64, 3), b = random_rows(n, 64, 4);
  std::vector<double> bias(static_cast<std::size_t>(n), 0.1);
  for (auto _ : st) benchmark::DoNotOptimize(Fn(a, b, 10, 2.0, bias));
  st.SetItemsProcessed(st.iterations() * n * n);
}

template <auto Fn>
void affinity(benchmark::State& st) {
  const auto n = st.range(0);
  const auto x = random_rows(n, 64, 5);
  for (auto _ : st) benchmark::DoNotOptimize(Fn(x, static_cast<std::size_t>(n / 4)));
  st.SetItemsProcessed(st.iterations() * n * n);
}

}  // namespace

BENCHMARK(topk_mean<kernels::serial::topk_mean_dot>)->Name("topk_mean_dot/serial")->Arg(1000)->Arg(4000);
BENCHMARK(topk_mean<kernels::omp::topk_mean_dot>)->Name("topk_mean_dot/omp")->Arg(1000)->Arg(4000);
BENCHMARK(topk_scores<kernels::serial::topk_scores>)->Name("topk_scores/serial")->Arg(1000)->Arg(4000);
BENCHMARK(topk_scores<kernels::omp::topk_scores>)->Name("topk_scores/omp")->Arg(1000)->Arg(4000);
BENCHMARK(affinity<kernels::serial::refined_affinity>)->Name("refined_affinity/serial")->Arg(500)->Arg(1000);
BENCHMARK(affinity<kernels::omp::refined_affinity>)->Name("refined_affinity/omp")->Arg(500)->Arg(1000);

BENCHMARK_MAIN();
