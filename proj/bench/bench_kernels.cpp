// Copyright 2026 The FOLNet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>
#include <vector>

#include "folnet/kernels.hpp"

namespace {

namespace k = folnet::kernels;

std::vector<double> random_buffer(std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

struct GemmCase {
  std::vector<double> a, b, c;
  std::vector<std::size_t> ao, bo, co;
  k::GemmBatch g;

  GemmCase(std::size_t batch, std::size_t m, std::size_t kk, std::size_t n, bool ta, bool tb)
      : a(random_buffer(batch * m * kk, 1)), b(random_buffer(batch * kk * n, 2)), c(batch * m * n) {
    for (std::size_t i = 0; i < batch; ++i) {
      ao.push_back(i * m * kk);
      bo.push_back(i * kk * n);
      co.push_back(i * m * n);
    }
    g = {m, kk, n, ta, tb, ao, bo, co, false, true};
  }
};

// Args: batch, m, k, n, trans_a, trans_b.
template <bool Parallel>
void BM_Gemm(benchmark::State& st) {
  GemmCase gc(st.range(0), st.range(1), st.range(2), st.range(3), st.range(4), st.range(5));
  for (auto _ : st) {
    if constexpr (Parallel) k::gemm_batched(gc.a.data(), gc.b.data(), gc.c.data(), gc.g);
    else k::serial::gemm_batched(gc.a.data(), gc.b.data(), gc.c.data(), gc.g);
    benchmark::DoNotOptimize(gc.c.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0) * st.range(1) * st.range(2) * st.range(3));
}

void gemm_shapes(benchmark::internal::Benchmark* b) {
  b->Args({64, 16, 16, 16, 0, 0});    // per-head [T, S] x [S, T]
  b->Args({64, 16, 16, 16, 0, 1});
  b->Args({64, 16, 16, 16, 1, 0});
  b->Args({1, 256, 64, 256, 0, 0});   // token projection
  b->Args({1, 256, 64, 256, 0, 1});
  b->Args({1, 4096, 8, 128, 0, 0});   // pair projection
}

template <bool Parallel>
void BM_Softmax(benchmark::State& st) {
  const std::size_t rows = st.range(0), n = st.range(1);
  auto x = random_buffer(rows * n, 3);
  std::vector<double> y(rows * n);
  for (auto _ : st) {
    if constexpr (Parallel) k::softmax_rows(x.data(), y.data(), rows, n);
    else k::serial::softmax_rows(x.data(), y.data(), rows, n);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_LayerNorm(benchmark::State& st) {
  const std::size_t rows = st.range(0), n = st.range(1);
  auto x = random_buffer(rows * n, 4);
  std::vector<double> gain(n, 1.0), bias(n, 0.0), y(rows * n), xhat(rows * n), inv(rows);
  for (auto _ : st) {
    if constexpr (Parallel) {
      k::layer_norm_rows(x.data(), gain.data(), bias.data(), y.data(), xhat.data(), inv.data(), rows, n, 1e-12);
    } else {
      k::serial::layer_norm_rows(x.data(), gain.data(), bias.data(), y.data(), xhat.data(), inv.data(), rows, n,
                                 1e-12);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_Permute(benchmark::State& st) {
  const std::vector<std::size_t> shape{16, 16, 16, 8}, perm{0, 3, 1, 2};
  auto x = random_buffer(16 * 16 * 16 * 8, 5);
  std::vector<double> y(x.size());
  for (auto _ : st) {
    if constexpr (Parallel) k::permute(x.data(), y.data(), shape, perm);
    else k::serial::permute(x.data(), y.data(), shape, perm);
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_Gemm<true>)->Name("gemm/parallel")->Apply(gemm_shapes);
BENCHMARK(BM_Gemm<false>)->Name("gemm/serial")->Apply(gemm_shapes);
BENCHMARK(BM_Softmax<true>)->Name("softmax/parallel")->Args({4096, 16})->Args({256, 512});
BENCHMARK(BM_Softmax<false>)->Name("softmax/serial")->Args({4096, 16})->Args({256, 512});
BENCHMARK(BM_LayerNorm<true>)->Name("layernorm/parallel")->Args({4096, 8})->Args({256, 64});
BENCHMARK(BM_LayerNorm<false>)->Name("layernorm/serial")->Args({4096, 8})->Args({256, 64});
BENCHMARK(BM_Permute<true>)->Name("permute/parallel");
BENCHMARK(BM_Permute<false>)->Name("permute/serial");

BENCHMARK_MAIN();
