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

#include "kart/train.h"

#include "kart/count_scorer.h"
#include "kart/io.h"
#include "kart/error.h"
#include "kart/tiny_mlm.h"
#include "toml_util.h"

namespace kart {

std::unique_ptr<ScorerModel> TrainModel(const Corpus& corpus, std::shared_ptr<const Vocabulary> vocab,
                                        const Tokenizer& tokenizer, const TrainingConfig& config) {
  switch (config.model_kind) {
    case ModelKind::kCountNb:
      return TrainCountScorer(corpus, std::move(vocab), tokenizer, config);
    case ModelKind::kTinyMlm:
      return TrainTinyMlm(corpus, std::move(vocab), tokenizer, config);
    case ModelKind::kUniform:
      return std::make_unique<UniformScorer>(std::move(vocab));
    case ModelKind::kExternal:
      break;
  }
  throw Error(ErrorKind::kConfiguration, "external models are connected, not trained");
}

TrainingConfig ParseTrainingConfig(std::string_view toml_text, TrainingConfig base) {
  ReadTrainingConfig(ParseToml(toml_text, "training config"), "training config", base);
  return base;
}

TrainingConfig LoadTrainingConfig(const std::filesystem::path& path, TrainingConfig base) {
  return ParseTrainingConfig(ReadFile(path), std::move(base));
}

}  // namespace kart
