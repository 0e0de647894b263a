#include <benchmark/benchmark.h>

#include <random>

#include "sod/kernels.hpp"

using namespace sod;
namespace k = sod::kernels;

namespace {

Matrix random_matrix(long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

// Comb on (I0, I1,O1, ..., IK,OK, O0) with d = d0 = 2.
std::vector<int> comb_dims(int K) { return std::vector<int>(2 * K + 2, 2); }

std::vector<std::vector<long>> slot_perms(int K) {
  std::vector<std::vector<long>> out;
  const std::vector<int> dims(2 * K, 2);
  for (const auto& s : all_permutations(K)) {
    std::vector<int> order(2 * K);
    for (int p = 0; p < K; ++p) {
      order[2 * p] = 2 * s[p];
      order[2 * p + 1] = 2 * s[p] + 1;
    }
    out.push_back(k::permuted_index(dims, order));
  }
  return out;
}

template <bool Parallel>
void BM_PartialTrace(benchmark::State& st) {
  const int K = static_cast<int>(st.range(0));
  const auto dims = comb_dims(K);
  const Matrix a = random_matrix(1L << dims.size(), 1);
  const std::vector<int> traced{static_cast<int>(dims.size()) - 1, 1};
  for (auto _ : st) {
    Matrix r = Parallel ? k::parallel::partial_trace(a, dims, traced) : k::serial::partial_trace(a, dims, traced);
    benchmark::DoNotOptimize(r.data());
  }
}

template <bool Parallel>
void BM_Permute(benchmark::State& st) {
  const int K = static_cast<int>(st.range(0));
  const auto dims = comb_dims(K);
  std::vector<int> order(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i) order[i] = static_cast<int>(dims.size() - 1 - i);
  const Matrix a = random_matrix(1L << dims.size(), 2);
  for (auto _ : st) {
    Matrix r = Parallel ? k::parallel::permute_subsystems(a, dims, order) : k::serial::permute_subsystems(a, dims, order);
    benchmark::DoNotOptimize(r.data());
  }
}

template <bool Parallel>
void BM_ContractMiddle(benchmark::State& st) {
  const int K = static_cast<int>(st.range(0));
  const long inner = 1L << (2 * K);
  const Matrix c = random_matrix(4 * inner, 3);
  const Matrix x = random_matrix(inner, 4);
  for (auto _ : st) {
    Matrix r = Parallel ? k::parallel::contract_middle(c, x, 2, 2) : k::serial::contract_middle(c, x, 2, 2);
    benchmark::DoNotOptimize(r.data());
  }
}

template <bool Parallel>
void BM_SandwichAverage(benchmark::State& st) {
  const int K = static_cast<int>(st.range(0));
  const auto perms = slot_perms(K);
  const Matrix a = random_matrix(1L << (2 * K), 5);
  for (auto _ : st) {
    Matrix r = Parallel ? k::parallel::sandwich_average(a, perms) : k::serial::sandwich_average(a, perms);
    benchmark::DoNotOptimize(r.data());
  }
}

template <bool Parallel>
void BM_ProjectPsd(benchmark::State& st) {
  const long n = st.range(0);
  Matrix h = random_matrix(n, 6);
  h = (h + h.adjoint()).eval();
  for (auto _ : st) {
    std::vector<Matrix> blocks{h, h};
    double lo = Parallel ? k::parallel::project_psd(blocks) : k::serial::project_psd(blocks);
    benchmark::DoNotOptimize(lo);
  }
}

}  // namespace

BENCHMARK_TEMPLATE(BM_PartialTrace, false)->DenseRange(2, 4);
BENCHMARK_TEMPLATE(BM_PartialTrace, true)->DenseRange(2, 4);
BENCHMARK_TEMPLATE(BM_Permute, false)->DenseRange(2, 4);
BENCHMARK_TEMPLATE(BM_Permute, true)->DenseRange(2, 4);
BENCHMARK_TEMPLATE(BM_ContractMiddle, false)->DenseRange(2, 3);
BENCHMARK_TEMPLATE(BM_ContractMiddle, true)->DenseRange(2, 3);
BENCHMARK_TEMPLATE(BM_SandwichAverage, false)->DenseRange(2, 4);
BENCHMARK_TEMPLATE(BM_SandwichAverage, true)->DenseRange(2, 4);
BENCHMARK_TEMPLATE(BM_ProjectPsd, false)->Arg(64)->Arg(128);
BENCHMARK_TEMPLATE(BM_ProjectPsd, true)->Arg(64)->Arg(128);

BENCHMARK_MAIN();
