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

#ifndef KART_TRAIN_H_
#define KART_TRAIN_H_

#include <filesystem>
#include <memory>
#include <string_view>

#include "kart/corpus.h"
#include "kart/scorer.h"
#include "kart/tokenizer.h"

namespace kart {

// Trains the model named by config.model_kind. kUniform yields an untrained
// UniformScorer; kExternal is rejected since external models live elsewhere.
std::unique_ptr<ScorerModel> TrainModel(const Corpus& corpus, std::shared_ptr<const Vocabulary> vocab,
                                        const Tokenizer& tokenizer, const TrainingConfig& config);

// Training keys at the top level of a TOML document, layered over `base`.
TrainingConfig ParseTrainingConfig(std::string_view toml_text, TrainingConfig base = {});
TrainingConfig LoadTrainingConfig(const std::filesystem::path& path, TrainingConfig base = {});

}  // namespace kart

#endif  // KART_TRAIN_H_
