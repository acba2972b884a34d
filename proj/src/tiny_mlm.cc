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

#include "kart/tiny_mlm.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "kart/error.h"
#include "kart/kernels.h"
#include "kart/random.h"

namespace kart {
namespace {

constexpr double kInitStd = 0.1;
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

enum : uint64_t { kInitEmbeddings = 1, kInitOutput, kStepStream };

std::vector<float> NormalMatrix(size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<float> m(n);
  for (float& x : m) x = static_cast<float>(rng.Normal() * kInitStd);
  return m;
}

// mean(E[context]) in double precision.
std::vector<double> ContextMean(const std::vector<float>& emb, size_t dim,
                                std::span<const TokenId> context) {
  std::vector<double> m(dim, 0.0);
  if (context.empty()) return m;
  for (TokenId t : context) {
    const float* row = emb.data() + static_cast<size_t>(t) * dim;
    for (size_t i = 0; i < dim; ++i) m[i] += row[i];
  }
  const double inv = 1.0 / static_cast<double>(context.size());
  for (double& x : m) x *= inv;
  return m;
}

std::vector<double> Project(const std::vector<float>& a, size_t dim, const std::vector<double>& m) {
  std::vector<double> h(dim, 0.0);
  for (size_t r = 0; r < dim; ++r) {
    double acc = 0.0;
    for (size_t c = 0; c < dim; ++c) acc += static_cast<double>(a[r * dim + c]) * m[c];
    h[r] = acc;
  }
  return h;
}

struct Adam {
  std::vector<double> m, v;
  explicit Adam(size_t n) : m(n, 0.0), v(n, 0.0) {}

  void Step(std::vector<float>& param, const std::vector<double>& grad, double lr, int t) {
    const double c1 = 1.0 - std::pow(kBeta1, t);
    const double c2 = 1.0 - std::pow(kBeta2, t);
    for (size_t i = 0; i < param.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      const double update = lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEps);
      param[i] = static_cast<float>(static_cast<double>(param[i]) - update);
    }
  }
};

}  // namespace

TinyMlmParams InitTinyMlm(size_t vocab_size, const TrainingConfig& config) {
  const auto d = static_cast<size_t>(config.embedding_dim);
  TinyMlmParams p;
  p.embeddings = NormalMatrix(vocab_size * d, DeriveSeed(config.seed, {kInitEmbeddings}));
  p.projection.assign(d * d, 0.0f);
  for (size_t i = 0; i < d; ++i) p.projection[i * d + i] = 1.0f;
  p.bias.assign(vocab_size, 0.0f);
  if (!config.tie_embeddings) {
    p.output = NormalMatrix(vocab_size * d, DeriveSeed(config.seed, {kInitOutput}));
  }
  return p;
}

TinyMlm::TinyMlm(std::shared_ptr<const Vocabulary> vocab, TinyMlmParams params,
                 ModelProvenance provenance)
    : vocab_(std::move(vocab)),
      params_(std::move(params)),
      provenance_(std::move(provenance)),
      dim_(static_cast<size_t>(provenance_.config.embedding_dim)) {
  const size_t w = vocab_->size();
  const bool tied = provenance_.config.tie_embeddings;
  if (params_.embeddings.size() != w * dim_ || params_.projection.size() != dim_ * dim_ ||
      params_.bias.size() != w || params_.output.size() != (tied ? 0 : w * dim_)) {
    throw Error(ErrorKind::kDataIntegrity,
                fmt::format("tiny_mlm parameter shapes do not match vocabulary {} and dim {}", w,
                            dim_));
  }
}

std::vector<double> TinyMlm::Distribution(std::span<const TokenId> context) const {
  const size_t w = vocab_->size();
  const auto h = Project(params_.projection, dim_, ContextMean(params_.embeddings, dim_, context));
  const auto& out = params_.output.empty() ? params_.embeddings : params_.output;
  std::vector<double> logits(w);
  kernels::Logits(out, w, dim_, h, params_.bias, logits, false);
  kernels::LogSoftmax(logits, false);
  return logits;
}

std::vector<std::vector<double>> TinyMlm::Score(
    std::span<const TokenId> ids, std::span<const size_t> mask_positions,
    std::span<const std::vector<TokenId>> candidates) const {
  std::vector<TokenId> context;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (Vocabulary::IsSpecial(ids[i])) continue;
    if (std::find(mask_positions.begin(), mask_positions.end(), i) != mask_positions.end()) continue;
    context.push_back(ids[i]);
  }
  const std::vector<double> dist = Distribution(context);
  std::vector<std::vector<double>> out;
  for (size_t m = 0; m < mask_positions.size(); ++m) {
    if (candidates[m].empty()) {
      out.push_back(dist);
      continue;
    }
    std::vector<double> picked;
    for (TokenId t : candidates[m]) picked.push_back(dist[static_cast<size_t>(t)]);
    out.push_back(std::move(picked));
  }
  return out;
}

std::vector<float> TinyMlm::Embedding(TokenId id) const {
  const auto begin = params_.embeddings.begin() + static_cast<ptrdiff_t>(static_cast<size_t>(id) * dim_);
  return {begin, begin + static_cast<ptrdiff_t>(dim_)};
}

std::vector<ParamArray> TinyMlm::ExportParams() const {
  std::vector<ParamArray> p = {
      {"embeddings", params_.embeddings},
      {"projection", params_.projection},
      {"bias", params_.bias},
  };
  if (!params_.output.empty()) p.push_back({"output", params_.output});
  return p;
}

TinyMlmParams TinyMlm::ParamsFromArrays(const std::vector<ParamArray>& arrays, size_t vocab_size,
                                        const TrainingConfig& config) {
  auto get = [&](std::string_view name, bool required) -> std::vector<float> {
    for (const ParamArray& a : arrays) {
      if (a.name != name) continue;
      if (const auto* v = std::get_if<std::vector<float>>(&a.data)) return *v;
      throw Error(ErrorKind::kDataIntegrity, fmt::format("array '{}' must be float32", name));
    }
    if (required) {
      throw Error(ErrorKind::kDataIntegrity, fmt::format("tiny_mlm model lacks array '{}'", name));
    }
    return {};
  };
  TinyMlmParams p;
  p.embeddings = get("embeddings", true);
  p.projection = get("projection", true);
  p.bias = get("bias", true);
  p.output = get("output", !config.tie_embeddings);
  (void)vocab_size;
  return p;
}

std::unique_ptr<TinyMlm> TrainTinyMlm(const Corpus& corpus, std::shared_ptr<const Vocabulary> vocab,
                                      const Tokenizer& tokenizer, const TrainingConfig& config,
                                      TrainingLog* log) {
  config.Validate();
  if (config.model_kind != ModelKind::kTinyMlm) {
    throw Error(ErrorKind::kConfiguration, "TrainTinyMlm needs model_kind = tiny_mlm");
  }
  const size_t w = vocab->size();
  const auto d = static_cast<size_t>(config.embedding_dim);
  const auto batch = static_cast<size_t>(config.batch_size);
  TinyMlmParams params = InitTinyMlm(w, config);

  ModelProvenance prov;
  prov.corpus_hash = CorpusDigest(corpus);
  prov.anonymizer = corpus.provenance.anonymizer;
  prov.config = config;
  prov.trained = config.steps > 0;
  prov.training_mode = config.parallel ? "parallel" : "serial";
  prov.model_id = fmt::format("tiny_mlm-{}-s{}", prov.corpus_hash.substr(0, 12), config.seed);

  std::vector<std::vector<TokenId>> segments;
  for (auto& seg : SegmentCorpus(corpus, tokenizer, *vocab, config.max_sequence_length)) {
    size_t ordinary = 0;
    for (TokenId t : seg) ordinary += !Vocabulary::IsSpecial(t);
    if (ordinary > 0) segments.push_back(std::move(seg));
  }
  if (segments.empty() && config.steps > 0) {
    throw Error(ErrorKind::kTraining, "training corpus has no tokens");
  }

  const bool tied = config.tie_embeddings;
  Adam adam_e(params.embeddings.size()), adam_a(params.projection.size()), adam_b(w),
      adam_o(params.output.size());
  std::vector<double> grad_e(params.embeddings.size()), grad_a(params.projection.size()),
      grad_b(w), grad_o(params.output.size());

  struct Example {
    std::vector<TokenId> context;
    std::vector<TokenId> targets;
    std::vector<double> mean, h, g, dh;
  };
  std::vector<Example> ex(batch);
  std::vector<double> g_all(batch * w), h_all(batch * d);

  for (int step = 1; step <= config.steps; ++step) {
    Rng rng(DeriveSeed(config.seed, {kStepStream, static_cast<uint64_t>(step)}));
    for (Example& e : ex) {
      const auto& seg = segments[rng.Below(segments.size())];
      e.context.clear();
      e.targets.clear();
      std::vector<size_t> ordinary;
      for (size_t i = 0; i < seg.size(); ++i) {
        if (!Vocabulary::IsSpecial(seg[i])) ordinary.push_back(i);
      }
      std::vector<bool> masked(seg.size(), false);
      for (size_t i : ordinary) masked[i] = rng.Bernoulli(config.mask_rate);
      bool any = false;
      for (size_t i : ordinary) any = any || masked[i];
      if (!any) masked[rng.Pick(ordinary)] = true;
      for (size_t i : ordinary) (masked[i] ? e.targets : e.context).push_back(seg[i]);
    }

    const auto& out = tied ? params.embeddings : params.output;
    const auto nb = static_cast<int64_t>(batch);
    double loss = 0.0;
    std::vector<double> losses(batch);
#pragma omp parallel for schedule(static) if (config.parallel)
    for (int64_t bi = 0; bi < nb; ++bi) {
      Example& e = ex[static_cast<size_t>(bi)];
      e.mean = ContextMean(params.embeddings, d, e.context);
      e.h = Project(params.projection, d, e.mean);
      e.g.assign(w, 0.0);
      kernels::Logits(out, w, d, e.h, params.bias, e.g, false);
      kernels::LogSoftmax(e.g, false);
      const double inv_t = 1.0 / static_cast<double>(e.targets.size());
      double l = 0.0;
      for (TokenId t : e.targets) l -= e.g[static_cast<size_t>(t)] * inv_t;
      losses[static_cast<size_t>(bi)] = l;
      // d(mean loss)/d(logits) = (softmax - mean one-hot) / batch.
      const double inv_b = 1.0 / static_cast<double>(batch);
      for (double& x : e.g) x = std::exp(x) * inv_b;
      for (TokenId t : e.targets) e.g[static_cast<size_t>(t)] -= inv_t * inv_b;
      e.dh.assign(d, 0.0);
      for (size_t r = 0; r < w; ++r) {
        const double gr = e.g[r];
        const float* row = out.data() + r * d;
        for (size_t i = 0; i < d; ++i) e.dh[i] += gr * row[i];
      }
    }
    for (double l : losses) loss += l;
    loss /= static_cast<double>(batch);
    if (!std::isfinite(loss)) {
      throw Error(ErrorKind::kTraining, fmt::format("non-finite loss at step {}", step));
    }
    if (log != nullptr) log->losses.push_back(loss);

    for (size_t b = 0; b < batch; ++b) {
      std::copy(ex[b].g.begin(), ex[b].g.end(), g_all.begin() + static_cast<ptrdiff_t>(b * w));
      std::copy(ex[b].h.begin(), ex[b].h.end(), h_all.begin() + static_cast<ptrdiff_t>(b * d));
    }
    std::fill(grad_e.begin(), grad_e.end(), 0.0);
    std::fill(grad_a.begin(), grad_a.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    std::fill(grad_o.begin(), grad_o.end(), 0.0);
    kernels::AccumulateOuter(tied ? grad_e : grad_o, w, d, g_all, h_all, batch, config.parallel);
    for (size_t b = 0; b < batch; ++b) {
      for (size_t r = 0; r < w; ++r) grad_b[r] += ex[b].g[r];
    }
    for (const Example& e : ex) {
      if (e.context.empty()) continue;
      // dA += dh ⊗ mean; d(mean) = Aᵀ dh spread evenly over the context.
      std::vector<double> dmean(d, 0.0);
      for (size_t r = 0; r < d; ++r) {
        for (size_t c = 0; c < d; ++c) {
          grad_a[r * d + c] += e.dh[r] * e.mean[c];
          dmean[c] += static_cast<double>(params.projection[r * d + c]) * e.dh[r];
        }
      }
      const double inv = 1.0 / static_cast<double>(e.context.size());
      for (TokenId t : e.context) {
        double* row = grad_e.data() + static_cast<size_t>(t) * d;
        for (size_t i = 0; i < d; ++i) row[i] += dmean[i] * inv;
      }
    }
    adam_e.Step(params.embeddings, grad_e, config.learning_rate, step);
    adam_a.Step(params.projection, grad_a, config.learning_rate, step);
    adam_b.Step(params.bias, grad_b, config.learning_rate, step);
    if (!tied) adam_o.Step(params.output, grad_o, config.learning_rate, step);
  }
  return std::make_unique<TinyMlm>(std::move(vocab), std::move(params), std::move(prov));
}

}  // namespace kart
