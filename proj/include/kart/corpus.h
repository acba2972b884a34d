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

#ifndef KART_CORPUS_H_
#define KART_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kart/phi.h"

namespace kart {

enum class NoteCategory {
  kCaseManagement,
  kConsult,
  kDischargeSummary,
  kEcg,
  kEcho,
  kGeneral,
  kNursing,
  kNursingOther,
  kNutrition,
  kPharmacy,
  kProgressNote,
  kRadiology,
  kRehabServices,
  kRespiratory,
  kSocialWork,
};

inline constexpr std::array<NoteCategory, 15> kAllNoteCategories = {
    NoteCategory::kCaseManagement, NoteCategory::kConsult,      NoteCategory::kDischargeSummary,
    NoteCategory::kEcg,            NoteCategory::kEcho,         NoteCategory::kGeneral,
    NoteCategory::kNursing,        NoteCategory::kNursingOther, NoteCategory::kNutrition,
    NoteCategory::kPharmacy,       NoteCategory::kProgressNote, NoteCategory::kRadiology,
    NoteCategory::kRehabServices,  NoteCategory::kRespiratory,  NoteCategory::kSocialWork,
};

std::string_view NoteCategoryName(NoteCategory category);
std::optional<NoteCategory> ParseNoteCategory(std::string_view name);

// Default stem for de-identification placeholders; the category tag is
// spliced in before the closing bracket ("[PH]" -> "[PH-NAME]").
inline constexpr std::string_view kDefaultMaskToken = "[PH]";

std::string PlaceholderToken(HipaaCategory category,
                             std::string_view mask_token = kDefaultMaskToken);
// Bracketed tokens other than the model specials ([CLS], [MASK], ...).
bool IsPlaceholderToken(std::string_view token);

struct PhiSpan {
  size_t start = 0;
  size_t end = 0;
  PhiField field = PhiField::kFirstName;
  std::optional<std::string> surrogate;
  int patient_id = 0;

  HipaaCategory category() const { return CategoryOf(field); }
  bool operator==(const PhiSpan&) const = default;
};

struct Document {
  std::string doc_id;
  int patient_id = 0;
  NoteCategory category = NoteCategory::kGeneral;
  std::string text;
  std::vector<PhiSpan> phi_spans;

  std::string_view SpanText(const PhiSpan& span) const {
    return std::string_view(text).substr(span.start, span.end - span.start);
  }
  bool operator==(const Document&) const = default;
};

enum class Split { kTrain, kVal };

struct CorpusProvenance {
  uint64_t seed = 0;
  std::string generator_version;
  double fill_rate = 0.0;
  // Description of the anonymization operator applied ("id", "hipaa", ...).
  std::string anonymizer = "id";

  bool operator==(const CorpusProvenance&) const = default;
};

struct Corpus {
  std::vector<Document> documents;
  Split split = Split::kTrain;
  CorpusProvenance provenance;

  bool operator==(const Corpus&) const = default;
};

inline constexpr std::string_view kGeneratorVersion = "kart-synth/1";

// Checks span bounds, ordering, overlap and surrogate/text agreement.
void ValidateDocument(const Document& doc);
// Validates every document, doc_id uniqueness and, when `table` is given,
// that every referenced patient exists in it.
void ValidateCorpus(const Corpus& corpus, const PhiTable* table = nullptr);

// JSON-lines: an optional provenance header line followed by one document
// per line. Files without the header are accepted (external ingestion).
void WriteCorpus(const Corpus& corpus, std::ostream& out);
Corpus ReadCorpus(std::istream& in);
void SaveCorpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus LoadCorpus(const std::filesystem::path& path);

std::string SerializeCorpus(const Corpus& corpus);
// SHA-256 of the serialized corpus.
std::string CorpusDigest(const Corpus& corpus);

}  // namespace kart

#endif  // KART_CORPUS_H_
