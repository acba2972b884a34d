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

#include "kart/corpus.h"

#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "json.hpp"
#include "kart/error.h"
#include "kart/io.h"

namespace kart {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 15> kNoteCategoryNames = {
    "case_management", "consult",       "discharge_summary", "ecg",          "echo",
    "general",         "nursing",       "nursing_other",     "nutrition",    "pharmacy",
    "progress_note",   "radiology",     "rehab_services",    "respiratory",  "social_work",
};

constexpr std::array<std::string_view, 5> kSpecialTokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]",
                                                            "[MASK]"};

Json SpanToJson(const PhiSpan& s) {
  Json j;
  j["start"] = s.start;
  j["end"] = s.end;
  j["category"] = std::string(PhiFieldName(s.field));
  if (s.surrogate) j["surrogate"] = *s.surrogate;
  j["patient_id"] = s.patient_id;
  return j;
}

Json DocumentToJson(const Document& d) {
  Json j;
  j["doc_id"] = d.doc_id;
  j["patient_id"] = d.patient_id;
  j["category"] = std::string(NoteCategoryName(d.category));
  j["text"] = d.text;
  j["phi_spans"] = Json::array();
  for (const PhiSpan& s : d.phi_spans) j["phi_spans"].push_back(SpanToJson(s));
  return j;
}

Document DocumentFromJson(const Json& j) {
  Document d;
  d.doc_id = j.at("doc_id").get<std::string>();
  d.patient_id = j.at("patient_id").get<int>();
  const std::string category = j.at("category").get<std::string>();
  auto parsed = ParseNoteCategory(category);
  if (!parsed) {
    throw Error(ErrorKind::kValidation,
                fmt::format("document {}: unknown note category '{}'", d.doc_id, category));
  }
  d.category = *parsed;
  d.text = j.at("text").get<std::string>();
  for (const Json& s : j.at("phi_spans")) {
    PhiSpan span;
    span.start = s.at("start").get<size_t>();
    span.end = s.at("end").get<size_t>();
    const std::string field = s.at("category").get<std::string>();
    auto f = ParsePhiField(field);
    if (!f) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("document {}: unknown span category '{}'", d.doc_id, field));
    }
    span.field = *f;
    if (auto it = s.find("surrogate"); it != s.end() && !it->is_null()) {
      span.surrogate = it->get<std::string>();
    }
    span.patient_id = s.value("patient_id", d.patient_id);
    d.phi_spans.push_back(std::move(span));
  }
  return d;
}

}  // namespace

std::string_view NoteCategoryName(NoteCategory category) {
  return kNoteCategoryNames[static_cast<size_t>(category)];
}

std::optional<NoteCategory> ParseNoteCategory(std::string_view name) {
  for (size_t i = 0; i < kNoteCategoryNames.size(); ++i) {
    if (kNoteCategoryNames[i] == name) return kAllNoteCategories[i];
  }
  return std::nullopt;
}

std::string PlaceholderToken(HipaaCategory category, std::string_view mask_token) {
  std::string_view stem = mask_token;
  if (!stem.empty() && stem.back() == ']') stem.remove_suffix(1);
  return fmt::format("{}-{}]", stem, PlaceholderTag(category));
}

bool IsPlaceholderToken(std::string_view token) {
  if (token.size() < 3 || token.front() != '[' || token.back() != ']') return false;
  for (std::string_view special : kSpecialTokens) {
    if (token == special) return false;
  }
  return true;
}

void ValidateDocument(const Document& doc) {
  size_t prev_end = 0;
  for (size_t i = 0; i < doc.phi_spans.size(); ++i) {
    const PhiSpan& s = doc.phi_spans[i];
    if (s.end < s.start) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("document {}: span {} has end {} < start {}", doc.doc_id, i, s.end,
                              s.start));
    }
    if (s.start == s.end || s.end > doc.text.size()) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("document {}: span {} [{}, {}) outside text of length {}",
                              doc.doc_id, i, s.start, s.end, doc.text.size()));
    }
    if (i > 0 && s.start < prev_end) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("document {}: span {} overlaps or is out of order", doc.doc_id, i));
    }
    if (s.surrogate && doc.SpanText(s) != *s.surrogate) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("document {}: span {} text '{}' differs from surrogate '{}'",
                              doc.doc_id, i, doc.SpanText(s), *s.surrogate));
    }
    prev_end = s.end;
  }
}

void ValidateCorpus(const Corpus& corpus, const PhiTable* table) {
  std::unordered_set<std::string> ids;
  for (const Document& doc : corpus.documents) {
    if (!ids.insert(doc.doc_id).second) {
      throw Error(ErrorKind::kValidation, fmt::format("duplicate doc_id {}", doc.doc_id));
    }
    ValidateDocument(doc);
    if (table != nullptr) {
      if (table->Find(doc.patient_id) == nullptr) {
        throw Error(ErrorKind::kDataIntegrity,
                    fmt::format("document {}: unknown patient_id {}", doc.doc_id, doc.patient_id));
      }
      for (const PhiSpan& s : doc.phi_spans) {
        if (table->Find(s.patient_id) == nullptr) {
          throw Error(ErrorKind::kDataIntegrity,
                      fmt::format("document {}: span references unknown patient_id {}",
                                  doc.doc_id, s.patient_id));
        }
      }
    }
  }
}

void WriteCorpus(const Corpus& corpus, std::ostream& out) {
  Json header;
  header["provenance"] = {
      {"split", corpus.split == Split::kTrain ? "train" : "val"},
      {"seed", corpus.provenance.seed},
      {"generator_version", corpus.provenance.generator_version},
      {"fill_rate", corpus.provenance.fill_rate},
      {"anonymizer", corpus.provenance.anonymizer},
  };
  out << header.dump() << '\n';
  for (const Document& d : corpus.documents) out << DocumentToJson(d).dump() << '\n';
}

Corpus ReadCorpus(std::istream& in) {
  Corpus corpus;
  ForEachLine(in, [&](std::string_view line, size_t number) {
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, fmt::format("line {}: {}", number, e.what()));
    }
    if (!j.is_object()) throw Error(ErrorKind::kParse, fmt::format("line {}: expected an object", number));
    try {
      if (auto it = j.find("provenance"); it != j.end() && !j.contains("doc_id")) {
        const Json& p = *it;
        corpus.split = p.value("split", std::string("train")) == "val" ? Split::kVal : Split::kTrain;
        corpus.provenance.seed = p.value("seed", uint64_t{0});
        corpus.provenance.generator_version = p.value("generator_version", std::string());
        corpus.provenance.fill_rate = p.value("fill_rate", 0.0);
        corpus.provenance.anonymizer = p.value("anonymizer", std::string("id"));
        return;
      }
      corpus.documents.push_back(DocumentFromJson(j));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, fmt::format("line {}: {}", number, e.what()));
    }
  });
  ValidateCorpus(corpus);
  return corpus;
}

void SaveCorpus(const Corpus& corpus, const std::filesystem::path& path) {
  WriteFileAtomic(path, [&](std::ostream& out) { WriteCorpus(corpus, out); });
}

Corpus LoadCorpus(const std::filesystem::path& path) {
  std::istringstream in(ReadFile(path));
  return ReadCorpus(in);
}

std::string SerializeCorpus(const Corpus& corpus) {
  std::ostringstream out;
  WriteCorpus(corpus, out);
  return out.str();
}

std::string CorpusDigest(const Corpus& corpus) { return Sha256Hex(SerializeCorpus(corpus)); }

}  // namespace kart
