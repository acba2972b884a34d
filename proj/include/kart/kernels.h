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

#ifndef KART_KERNELS_H_
#define KART_KERNELS_H_

#include <cstddef>
#include <span>

// Numeric kernels shared by the scorers and metrics. Each kernel takes a
// `parallel` switch that enables an OpenMP region; the arithmetic is the same
// either way (per-element work is independent and every reduction runs over
// fixed-size blocks combined in index order), so results are bit-identical
// for any thread count. The `reference` namespace holds the plain serial
// loops used as test oracles and benchmark baselines.
namespace kart::kernels {

inline constexpr size_t kReductionBlock = 1024;

// OpenMP team size for parallel regions; 0 keeps the runtime default.
void SetThreadCount(int threads);
int ThreadCount();

// out[w] = bias[w] + sum_i table[w * dim + i] * h[i], for w in [0, rows).
void Logits(std::span<const float> table, size_t rows, size_t dim, std::span<const double> h,
            std::span<const float> bias, std::span<double> out, bool parallel);

// In-place log-softmax; returns the log-normalizer.
double LogSoftmax(std::span<double> v, bool parallel);

// grad[w * dim + i] += sum_b g[b * rows + w] * h[b * dim + i], b in [0, batch).
void AccumulateOuter(std::span<double> grad, size_t rows, size_t dim, std::span<const double> g,
                     std::span<const double> h, size_t batch, bool parallel);

// KL(p || q) over the grid of products p_first[j] * p_last[k] against
// q_first[j] * q_last[k]. Both products are clamped below by eps inside the
// log; cells with p = 0 contribute nothing.
double GridKl(std::span<const double> p_first, std::span<const double> p_last,
              std::span<const double> q_first, std::span<const double> q_last, double eps,
              bool parallel);

namespace reference {

void Logits(std::span<const float> table, size_t rows, size_t dim, std::span<const double> h,
            std::span<const float> bias, std::span<double> out);
double LogSoftmax(std::span<double> v);
void AccumulateOuter(std::span<double> grad, size_t rows, size_t dim, std::span<const double> g,
                     std::span<const double> h, size_t batch);
double GridKl(std::span<const double> p_first, std::span<const double> p_last,
              std::span<const double> q_first, std::span<const double> q_last, double eps);

}  // namespace reference

}  // namespace kart::kernels

#endif  // KART_KERNELS_H_
