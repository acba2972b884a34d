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

#include "kart/kernels.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <omp.h>

namespace kart::kernels {
namespace {

size_t BlockCount(size_t n) { return (n + kReductionBlock - 1) / kReductionBlock; }

}  // namespace

void SetThreadCount(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int ThreadCount() { return omp_get_max_threads(); }

void Logits(std::span<const float> table, size_t rows, size_t dim, std::span<const double> h,
            std::span<const float> bias, std::span<double> out, bool parallel) {
  const auto n = static_cast<int64_t>(rows);
#pragma omp parallel for schedule(static) if (parallel)
  for (int64_t w = 0; w < n; ++w) {
    const float* row = table.data() + static_cast<size_t>(w) * dim;
    double acc = bias.empty() ? 0.0 : static_cast<double>(bias[static_cast<size_t>(w)]);
    for (size_t i = 0; i < dim; ++i) acc += static_cast<double>(row[i]) * h[i];
    out[static_cast<size_t>(w)] = acc;
  }
}

double LogSoftmax(std::span<double> v, bool parallel) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const size_t n = v.size();
  const size_t blocks = BlockCount(n);
  double max = -std::numeric_limits<double>::infinity();
  for (double x : v) max = std::max(max, x);
  std::vector<double> partial(blocks, 0.0);
  const auto nb = static_cast<int64_t>(blocks);
#pragma omp parallel for schedule(static) if (parallel)
  for (int64_t b = 0; b < nb; ++b) {
    const size_t lo = static_cast<size_t>(b) * kReductionBlock;
    const size_t hi = std::min(n, lo + kReductionBlock);
    double s = 0.0;
    for (size_t i = lo; i < hi; ++i) s += std::exp(v[i] - max);
    partial[static_cast<size_t>(b)] = s;
  }
  double sum = 0.0;
  for (double s : partial) sum += s;
  const double log_z = max + std::log(sum);
  const auto nn = static_cast<int64_t>(n);
#pragma omp parallel for schedule(static) if (parallel)
  for (int64_t i = 0; i < nn; ++i) v[static_cast<size_t>(i)] -= log_z;
  return log_z;
}

void AccumulateOuter(std::span<double> grad, size_t rows, size_t dim, std::span<const double> g,
                     std::span<const double> h, size_t batch, bool parallel) {
  const auto n = static_cast<int64_t>(rows);
#pragma omp parallel for schedule(static) if (parallel)
  for (int64_t w = 0; w < n; ++w) {
    double* row = grad.data() + static_cast<size_t>(w) * dim;
    for (size_t b = 0; b < batch; ++b) {
      const double gw = g[b * rows + static_cast<size_t>(w)];
      if (gw == 0.0) continue;
      const double* hb = h.data() + b * dim;
      for (size_t i = 0; i < dim; ++i) row[i] += gw * hb[i];
    }
  }
}

double GridKl(std::span<const double> p_first, std::span<const double> p_last,
              std::span<const double> q_first, std::span<const double> q_last, double eps,
              bool parallel) {
  const size_t rows = p_first.size();
  const size_t cols = p_last.size();
  std::vector<double> partial(rows, 0.0);
  const auto n = static_cast<int64_t>(rows);
#pragma omp parallel for schedule(static) if (parallel)
  for (int64_t j = 0; j < n; ++j) {
    const size_t jj = static_cast<size_t>(j);
    double s = 0.0;
    for (size_t k = 0; k < cols; ++k) {
      const double p = p_first[jj] * p_last[k];
      if (p > 0.0) s += p * std::log(std::max(p, eps) / std::max(q_first[jj] * q_last[k], eps));
    }
    partial[jj] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

namespace reference {

void Logits(std::span<const float> table, size_t rows, size_t dim, std::span<const double> h,
            std::span<const float> bias, std::span<double> out) {
  for (size_t w = 0; w < rows; ++w) {
    double acc = bias.empty() ? 0.0 : static_cast<double>(bias[w]);
    for (size_t i = 0; i < dim; ++i) acc += static_cast<double>(table[w * dim + i]) * h[i];
    out[w] = acc;
  }
}

double LogSoftmax(std::span<double> v) {
  double max = -std::numeric_limits<double>::infinity();
  for (double x : v) max = std::max(max, x);
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - max);
  const double log_z = max + std::log(sum);
  for (double& x : v) x -= log_z;
  return log_z;
}

void AccumulateOuter(std::span<double> grad, size_t rows, size_t dim, std::span<const double> g,
                     std::span<const double> h, size_t batch) {
  for (size_t b = 0; b < batch; ++b) {
    for (size_t w = 0; w < rows; ++w) {
      for (size_t i = 0; i < dim; ++i) grad[w * dim + i] += g[b * rows + w] * h[b * dim + i];
    }
  }
}

double GridKl(std::span<const double> p_first, std::span<const double> p_last,
              std::span<const double> q_first, std::span<const double> q_last, double eps) {
  double total = 0.0;
  for (size_t j = 0; j < p_first.size(); ++j) {
    for (size_t k = 0; k < p_last.size(); ++k) {
      const double p = p_first[j] * p_last[k];
      if (p > 0.0) total += p * std::log(std::max(p, eps) / std::max(q_first[j] * q_last[k], eps));
    }
  }
  return total;
}

}  // namespace reference
}  // namespace kart::kernels
