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

#ifndef KART_GENERATOR_H_
#define KART_GENERATOR_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kart/corpus.h"
#include "kart/lexicon.h"
#include "kart/phi.h"

namespace kart {

// Inputs for GeneratePhiTable beyond the name lexicon.
struct PopulationSources {
  ClinicalLexicon clinical;
  std::vector<std::string> hospitals;
  // Condition assigned to exactly `planted_patients` patients and withheld
  // from everyone else.
  std::optional<std::string> planted_condition;
  int planted_patients = 0;
};

PopulationSources LoadDefaultPopulationSources();

PhiTable GeneratePhiTable(int n_patients, uint64_t seed, const NameLexicon& names,
                          const PopulationSources& sources);

// Sentence templates. Slots are written {name}; PHI slots use the PhiField
// names (first_name, phone, hospital, ...) and render as placeholder tokens.
// Non-PHI slots: age, sex, pmh_list, pmh_item, medication_list,
// medication_item.
struct TemplateConfig {
  double mention_fraction = 0.3;
  int docs_per_patient_min = 10;
  int docs_per_patient_max = 10;
  int identifier_sentences_min = 4;
  int identifier_sentences_max = 7;
  int category_sentences_per_doc = 2;
  std::string mention;
  std::vector<std::string> mention_followups;
  std::vector<std::string> always;
  std::vector<std::string> identifier_sentences;
  std::vector<std::string> diagnosis_sentences;
  std::vector<std::string> medication_sentences;
  std::map<NoteCategory, std::vector<std::string>> category_sentences;
  std::string mask_token = std::string(kDefaultMaskToken);

  static TemplateConfig Default();
  // Throws kTemplate for unknown slots or a note category without sentences.
  void Validate() const;
};

Corpus SynthesizeDocuments(const PhiTable& table, const TemplateConfig& config, uint64_t seed);

Corpus FillPlaceholders(const Corpus& corpus, const PhiTable& table, double fill_rate,
                        uint64_t seed);

enum class SubsetMode { kLargeLike, kSmallLike };
std::optional<SubsetMode> ParseSubsetMode(std::string_view name);

std::pair<Corpus, Corpus> SelectSubset(const Corpus& corpus, SubsetMode mode, size_t train_size,
                                       size_t val_size, uint64_t seed);

// Full generator configuration as read from TOML.
struct GeneratorConfig {
  uint64_t seed = 0;
  int patients = 100;
  TemplateConfig templates = TemplateConfig::Default();
  double fill_rate = 0.723;
  SubsetMode subset_mode = SubsetMode::kLargeLike;
  std::optional<std::pair<size_t, size_t>> sizes;
  std::optional<std::string> planted_condition;
  int planted_patients = 0;
};

GeneratorConfig ParseGeneratorConfig(std::string_view toml_text);
GeneratorConfig LoadGeneratorConfig(const std::filesystem::path& path);

struct GeneratedWorld {
  PhiTable gold;
  Corpus unfilled;
  Corpus filled;
  Corpus train;
  Corpus val;
};

// generate -> synthesize -> fill -> subset, each stage on its own derived seed.
GeneratedWorld GenerateWorld(const GeneratorConfig& config, const NameLexicon& names,
                             const PopulationSources& sources);

}  // namespace kart

#endif  // KART_GENERATOR_H_
