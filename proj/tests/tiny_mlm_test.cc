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

#include <cmath>

#include <gtest/gtest.h>

#include "kart/error.h"
#include "test_support.h"

namespace kart {
namespace {

Corpus SmallCorpus() {
  Corpus c;
  const char* texts[] = {
      "mary smith is a 54 year old female . past medical history includes asthma .",
      "john brown is a 61 year old male . past medical history includes gout .",
      "mary smith returned . asthma is stable .",
  };
  int i = 0;
  for (const char* t : texts) {
    Document d;
    d.doc_id = "d" + std::to_string(i++);
    d.text = t;
    c.documents.push_back(d);
  }
  return c;
}

TrainingConfig Config(bool parallel = false) {
  TrainingConfig cfg;
  cfg.model_kind = ModelKind::kTinyMlm;
  cfg.learning_rate = 0.05;
  cfg.steps = 40;
  cfg.embedding_dim = 8;
  cfg.batch_size = 4;
  cfg.max_sequence_length = 16;
  cfg.seed = 3;
  cfg.parallel = parallel;
  return cfg;
}

std::shared_ptr<const Vocabulary> Vocab() {
  static const Corpus c = SmallCorpus();
  static const auto v =
      std::make_shared<const Vocabulary>(BuildVocabulary({&c}, testing::Lexicon(), Tokenizer{}));
  return v;
}

// Forward pass written out directly from the parameter arrays.
std::vector<double> Forward(const TinyMlmParams& p, size_t w, size_t d,
                            const std::vector<TokenId>& context) {
  std::vector<double> mean(d, 0.0);
  for (TokenId t : context) {
    for (size_t i = 0; i < d; ++i) mean[i] += p.embeddings[static_cast<size_t>(t) * d + i];
  }
  if (!context.empty()) {
    for (double& x : mean) x /= static_cast<double>(context.size());
  }
  std::vector<double> h(d, 0.0);
  for (size_t r = 0; r < d; ++r) {
    for (size_t i = 0; i < d; ++i) h[r] += p.projection[r * d + i] * mean[i];
  }
  const auto& out = p.output.empty() ? p.embeddings : p.output;
  std::vector<double> logits(w);
  double m = -INFINITY;
  for (size_t t = 0; t < w; ++t) {
    double s = p.bias[t];
    for (size_t i = 0; i < d; ++i) s += out[t * d + i] * h[i];
    logits[t] = s;
    m = std::max(m, s);
  }
  double z = 0;
  for (double s : logits) z += std::exp(s - m);
  for (double& s : logits) s -= m + std::log(z);
  return logits;
}

TEST(TinyMlmTest, InitialParametersFollowTheDocumentedScheme) {
  TinyMlmParams p = InitTinyMlm(50, Config());
  EXPECT_EQ(p.embeddings.size(), 50u * 8);
  EXPECT_EQ(p.bias, std::vector<float>(50, 0.0f));
  EXPECT_TRUE(p.output.empty());
  for (size_t r = 0; r < 8; ++r) {
    for (size_t c = 0; c < 8; ++c) EXPECT_EQ(p.projection[r * 8 + c], r == c ? 1.0f : 0.0f);
  }
  double sq = 0;
  for (float x : p.embeddings) sq += x * x;
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(p.embeddings.size())), 0.1, 0.02);
  EXPECT_EQ(InitTinyMlm(50, Config()), p);
  TrainingConfig untied = Config();
  untied.tie_embeddings = false;
  EXPECT_EQ(InitTinyMlm(50, untied).output.size(), 50u * 8);
}

TEST(TinyMlmTest, ScoreMatchesAnExplicitForwardPass) {
  TrainingLog log;
  auto model = TrainTinyMlm(SmallCorpus(), Vocab(), Tokenizer{}, Config(), &log);
  const Vocabulary& v = *Vocab();
  std::vector<TokenId> ids = {Vocabulary::kClsId, Vocabulary::kMaskId, *v.Find("smith"),
                              *v.Find("is"), Vocabulary::kSepId};
  std::vector<size_t> masks = {1};
  std::vector<std::vector<TokenId>> cands(1);
  auto got = model->Score(ids, masks, cands)[0];
  auto want = Forward(model->params(), v.size(), 8, {*v.Find("smith"), *v.Find("is")});
  ASSERT_EQ(got.size(), want.size());
  double mass = 0;
  for (size_t i = 0; i < got.size(); ++i) {
    EXPECT_NEAR(got[i], want[i], 1e-9);
    mass += std::exp(got[i]);
  }
  EXPECT_NEAR(mass, 1.0, 1e-6);
}

TEST(TinyMlmTest, TrainingReducesLossAndMovesEmbeddings) {
  TrainingLog log;
  TrainingConfig cfg = Config();
  cfg.steps = 150;
  auto model = TrainTinyMlm(SmallCorpus(), Vocab(), Tokenizer{}, cfg, &log);
  ASSERT_EQ(log.losses.size(), 150u);
  double head = 0, tail = 0;
  for (size_t i = 0; i < 10; ++i) {
    head += log.losses[i];
    tail += log.losses[log.losses.size() - 1 - i];
  }
  EXPECT_LT(tail, head);
  const TinyMlmParams init = InitTinyMlm(Vocab()->size(), cfg);
  const TokenId mary = *Vocab()->Find("mary");
  double moved = 0;
  for (size_t i = 0; i < 8; ++i) {
    moved += std::abs(model->params().embeddings[static_cast<size_t>(mary) * 8 + i] -
                      init.embeddings[static_cast<size_t>(mary) * 8 + i]);
  }
  EXPECT_GT(moved, 0.0);
  EXPECT_EQ(ExportEmbeddings(*model, {"mary"}).at("mary"), model->Embedding(mary));
}

TEST(TinyMlmTest, ParallelTrainingIsBitIdenticalToSerial) {
  auto serial = TrainTinyMlm(SmallCorpus(), Vocab(), Tokenizer{}, Config(false));
  auto parallel = TrainTinyMlm(SmallCorpus(), Vocab(), Tokenizer{}, Config(true));
  EXPECT_EQ(serial->params(), parallel->params());
  EXPECT_EQ(serial->provenance().training_mode, "serial");
  EXPECT_EQ(parallel->provenance().training_mode, "parallel");
}

TEST(TinyMlmTest, ParamsRoundTrip) {
  auto model = TrainTinyMlm(SmallCorpus(), Vocab(), Tokenizer{}, Config());
  EXPECT_EQ(TinyMlm::ParamsFromArrays(model->ExportParams(), Vocab()->size(), Config()),
            model->params());
  auto arrays = model->ExportParams();
  arrays.pop_back();
  EXPECT_THROW(TinyMlm::ParamsFromArrays(arrays, Vocab()->size(), Config()), Error);
}

TEST(TinyMlmTest, WrongModelKindIsRejected) {
  TrainingConfig cfg = Config();
  cfg.model_kind = ModelKind::kCountNb;
  EXPECT_THROW(TrainTinyMlm(SmallCorpus(), Vocab(), Tokenizer{}, cfg), Error);
}

}  // namespace
}  // namespace kart
