// Copyright 2026 The KART Harness Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference loops against the OpenMP kernels at scorer-sized shapes.
// Set OMP_NUM_THREADS to vary the team size.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "kart/kernels.h"

namespace {

namespace kk = kart::kernels;

constexpr size_t kDim = 64;

std::vector<float> RandomFloats(size_t n, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> d(0.0f, 0.1f);
  std::vector<float> v(n);
  for (float& x : v) x = d(gen);
  return v;
}

std::vector<double> RandomDoubles(size_t n, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(1e-3, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(gen);
  return v;
}

std::vector<double> Normalized(std::vector<double> v) {
  double total = 0;
  for (double x : v) total += x;
  for (double& x : v) x /= total;
  return v;
}

// mode 0: reference, 1: kernel serial, 2: kernel parallel
void BM_Logits(benchmark::State& state) {
  const size_t rows = static_cast<size_t>(state.range(0));
  const auto table = RandomFloats(rows * kDim, 1);
  const auto bias = RandomFloats(rows, 2);
  const auto h = RandomDoubles(kDim, 3);
  std::vector<double> out(rows);
  for (auto _ : state) {
    if (state.range(1) == 0) {
      kk::reference::Logits(table, rows, kDim, h, bias, out);
    } else {
      kk::Logits(table, rows, kDim, h, bias, out, state.range(1) == 2);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(rows));
}
BENCHMARK(BM_Logits)->ArgsProduct({{4096, 32768}, {0, 1, 2}})->ArgNames({"n", "mode"});

void BM_LogSoftmax(benchmark::State& state) {
  const auto base = RandomDoubles(static_cast<size_t>(state.range(0)), 4);
  std::vector<double> v;
  for (auto _ : state) {
    v = base;
    benchmark::DoNotOptimize(state.range(1) == 0 ? kk::reference::LogSoftmax(v)
                                                 : kk::LogSoftmax(v, state.range(1) == 2));
  }
}
BENCHMARK(BM_LogSoftmax)->ArgsProduct({{4096, 32768}, {0, 1, 2}})->ArgNames({"n", "mode"});

void BM_AccumulateOuter(benchmark::State& state) {
  const size_t rows = static_cast<size_t>(state.range(0));
  const size_t batch = 32;
  const auto g = RandomDoubles(batch * rows, 5);
  const auto h = RandomDoubles(batch * kDim, 6);
  std::vector<double> grad(rows * kDim);
  for (auto _ : state) {
    if (state.range(1) == 0) {
      kk::reference::AccumulateOuter(grad, rows, kDim, g, h, batch);
    } else {
      kk::AccumulateOuter(grad, rows, kDim, g, h, batch, state.range(1) == 2);
    }
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_AccumulateOuter)->ArgsProduct({{4096}, {0, 1, 2}})->ArgNames({"n", "mode"});

void BM_GridKl(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  const auto pf = Normalized(RandomDoubles(n, 7)), pl = Normalized(RandomDoubles(n, 8));
  const auto qf = Normalized(RandomDoubles(n, 9)), ql = Normalized(RandomDoubles(n, 10));
  for (auto _ : state) {
    benchmark::DoNotOptimize(state.range(1) == 0 ? kk::reference::GridKl(pf, pl, qf, ql, 1e-300)
                                                 : kk::GridKl(pf, pl, qf, ql, 1e-300, state.range(1) == 2));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n));
}
BENCHMARK(BM_GridKl)->ArgsProduct({{256, 1024}, {0, 1, 2}})->ArgNames({"n", "mode"});

}  // namespace

BENCHMARK_MAIN();
