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

#include "kart/anonymize.h"

#include <algorithm>
#include <map>
#include <tuple>
#include <unordered_map>

#include <fmt/format.h>

#include "kart/error.h"
#include "kart/tokenizer.h"

namespace kart {

AnonymizationOp AnonymizationOp::Identity() { return AnonymizationOp{}; }

AnonymizationOp AnonymizationOp::Hipaa() {
  AnonymizationOp op;
  op.kind = AnonymizerKind::kHipaa;
  op.masked_categories = AllHipaaCategorySet();
  return op;
}

AnonymizationOp AnonymizationOp::Custom(std::set<HipaaCategory> categories) {
  if (categories.empty()) return Identity();
  if (categories.size() == kAllHipaaCategories.size()) return Hipaa();
  AnonymizationOp op;
  op.kind = AnonymizerKind::kCustom;
  op.masked_categories = std::move(categories);
  return op;
}

std::string AnonymizationOp::Describe() const {
  switch (kind) {
    case AnonymizerKind::kId: return "id";
    case AnonymizerKind::kHipaa: return "hipaa";
    case AnonymizerKind::kCustom: break;
  }
  std::string out = "custom:";
  bool first = true;
  for (HipaaCategory c : masked_categories) {
    if (!first) out += '+';
    out += HipaaCategoryName(c);
    first = false;
  }
  return out;
}

AnonymizationOp AnonymizationOp::Parse(std::string_view description) {
  if (description == "id") return Identity();
  if (description == "hipaa") return Hipaa();
  constexpr std::string_view kPrefix = "custom:";
  if (!description.starts_with(kPrefix)) {
    throw Error(ErrorKind::kConfiguration,
                fmt::format("unknown anonymizer '{}' (expected id, hipaa or custom:...)",
                            description));
  }
  std::set<HipaaCategory> cats;
  std::string_view rest = description.substr(kPrefix.size());
  while (!rest.empty()) {
    size_t cut = rest.find_first_of("+,");
    std::string_view name = rest.substr(0, cut);
    auto c = ParseHipaaCategory(name);
    if (!c) {
      throw Error(ErrorKind::kConfiguration, fmt::format("unknown identifier category '{}'", name));
    }
    cats.insert(*c);
    if (cut == std::string_view::npos) break;
    rest.remove_prefix(cut + 1);
  }
  return Custom(std::move(cats));
}

void AnonymizationOp::Validate() const {
  const bool full = masked_categories.size() == kAllHipaaCategories.size();
  const bool empty = masked_categories.empty();
  if ((kind == AnonymizerKind::kHipaa) != full || (kind == AnonymizerKind::kId) != empty) {
    throw Error(ErrorKind::kValidation,
                fmt::format("anonymizer kind '{}' disagrees with its {} masked categories",
                            Describe(), masked_categories.size()));
  }
}

Corpus ApplyAnonymizer(const Corpus& corpus, const AnonymizationOp& op) {
  op.Validate();
  Corpus out;
  out.split = corpus.split;
  out.provenance = corpus.provenance;
  if (op.kind != AnonymizerKind::kId) out.provenance.anonymizer = op.Describe();
  out.documents.resize(corpus.documents.size());
  const auto n = static_cast<int64_t>(corpus.documents.size());

#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < n; ++i) {
    const Document& in = corpus.documents[static_cast<size_t>(i)];
    Document& doc = out.documents[static_cast<size_t>(i)];
    if (op.kind == AnonymizerKind::kId) {
      doc = in;
      continue;
    }
    doc.doc_id = in.doc_id;
    doc.patient_id = in.patient_id;
    doc.category = in.category;
    size_t cursor = 0;
    for (const PhiSpan& span : in.phi_spans) {
      doc.text.append(in.text, cursor, span.start - cursor);
      cursor = span.end;
      PhiSpan next = span;
      next.start = doc.text.size();
      if (span.surrogate && op.masked_categories.contains(span.category())) {
        doc.text += PlaceholderToken(span.category(), op.mask_token);
        next.surrogate.reset();
      } else {
        doc.text.append(in.SpanText(span));
      }
      next.end = doc.text.size();
      doc.phi_spans.push_back(std::move(next));
    }
    doc.text.append(in.text, cursor, std::string::npos);
  }
  return out;
}

namespace {

bool IsAlnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

enum class NamePart { kNone, kFull, kSingle };

struct Pattern {
  std::string text;  // lowercased
  HipaaCategory category;
  NamePart part;
  int patient_id;  // smallest owner; see OwnerFor
  std::vector<int> owners;
};

std::vector<Pattern> BuildPatterns(const PhiTable& table, const std::set<HipaaCategory>& categories) {
  std::map<std::pair<std::string, HipaaCategory>, Pattern> by_key;
  auto add = [&](std::string_view value, HipaaCategory cat, NamePart part, int pid) {
    std::string text = ToLowerAscii(value);
    if (std::none_of(text.begin(), text.end(), IsAlnum)) return;
    auto [it, inserted] = by_key.try_emplace({text, cat}, Pattern{text, cat, part, pid, {}});
    if (part == NamePart::kFull) it->second.part = NamePart::kFull;
    it->second.owners.push_back(pid);
  };
  for (const PhiRecord& r : table.rows) {
    for (PhiField field : kAllPhiFields) {
      const HipaaCategory cat = CategoryOf(field);
      if (!categories.contains(cat)) continue;
      if (field == PhiField::kFirstName || field == PhiField::kLastName) {
        for (const std::string& v : r.Values(field)) add(v, cat, NamePart::kSingle, r.patient_id);
        continue;
      }
      for (const std::string& v : r.Values(field)) add(v, cat, NamePart::kNone, r.patient_id);
    }
    if (categories.contains(HipaaCategory::kNames) && !r.first_name.empty() &&
        !r.last_name.empty()) {
      add(r.FullName(), HipaaCategory::kNames, NamePart::kFull, r.patient_id);
    }
  }
  std::vector<Pattern> out;
  for (auto& [key, p] : by_key) {
    std::sort(p.owners.begin(), p.owners.end());
    p.owners.erase(std::unique(p.owners.begin(), p.owners.end()), p.owners.end());
    p.patient_id = p.owners.front();
    out.push_back(std::move(p));
  }
  return out;
}

int OwnerFor(const Pattern& p, int doc_patient) {
  return std::binary_search(p.owners.begin(), p.owners.end(), doc_patient) ? doc_patient
                                                                           : p.patient_id;
}

bool MatchesAt(std::string_view lowered, size_t start, const std::string& pattern) {
  if (start + pattern.size() > lowered.size()) return false;
  if (lowered.compare(start, pattern.size(), pattern) != 0) return false;
  if (start > 0 && IsAlnum(lowered[start - 1]) && IsAlnum(pattern.front())) return false;
  const size_t end = start + pattern.size();
  if (end < lowered.size() && IsAlnum(lowered[end]) && IsAlnum(pattern.back())) return false;
  return true;
}

struct RawHit {
  size_t offset;
  size_t length;
  const Pattern* pattern;
};

// Drops single-name hits that fall inside a full-name hit and converts the
// rest into sorted PhiHits.
std::vector<PhiHit> Finalize(const Document& doc, std::vector<RawHit> raw) {
  std::vector<std::pair<size_t, size_t>> full;
  for (const RawHit& h : raw) {
    if (h.pattern->part == NamePart::kFull) full.emplace_back(h.offset, h.offset + h.length);
  }
  std::vector<PhiHit> out;
  for (const RawHit& h : raw) {
    if (h.pattern->part == NamePart::kSingle) {
      bool covered = std::any_of(full.begin(), full.end(), [&](const auto& f) {
        return h.offset >= f.first && h.offset + h.length <= f.second;
      });
      if (covered) continue;
    }
    out.push_back({doc.doc_id, h.offset, h.pattern->category, OwnerFor(*h.pattern, doc.patient_id)});
  }
  std::sort(out.begin(), out.end(), [](const PhiHit& a, const PhiHit& b) {
    return std::tie(a.offset, a.category, a.patient_id) < std::tie(b.offset, b.category, b.patient_id);
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<PhiHit> Merge(const Corpus& corpus, std::vector<std::vector<PhiHit>> per_doc) {
  std::vector<size_t> order(corpus.documents.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return corpus.documents[a].doc_id < corpus.documents[b].doc_id;
  });
  std::vector<PhiHit> out;
  for (size_t i : order) {
    for (PhiHit& h : per_doc[i]) out.push_back(std::move(h));
  }
  return out;
}

}  // namespace

std::vector<PhiHit> ScanForPhi(const Corpus& corpus, const PhiTable& table,
                               const std::set<HipaaCategory>& categories) {
  const std::vector<Pattern> patterns = BuildPatterns(table, categories);
  // Patterns keyed by their first alphanumeric run; a text match must align
  // that run with a maximal run in the document.
  std::unordered_map<std::string, std::vector<std::pair<size_t, const Pattern*>>> index;
  for (const Pattern& p : patterns) {
    size_t b = 0;
    while (!IsAlnum(p.text[b])) ++b;
    size_t e = b;
    while (e < p.text.size() && IsAlnum(p.text[e])) ++e;
    index[p.text.substr(b, e - b)].emplace_back(b, &p);
  }

  std::vector<std::vector<PhiHit>> per_doc(corpus.documents.size());
  const auto n = static_cast<int64_t>(corpus.documents.size());
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < n; ++i) {
    const Document& doc = corpus.documents[static_cast<size_t>(i)];
    const std::string lowered = ToLowerAscii(doc.text);
    std::vector<RawHit> raw;
    size_t pos = 0;
    while (pos < lowered.size()) {
      if (!IsAlnum(lowered[pos])) {
        ++pos;
        continue;
      }
      size_t end = pos;
      while (end < lowered.size() && IsAlnum(lowered[end])) ++end;
      auto it = index.find(lowered.substr(pos, end - pos));
      if (it != index.end()) {
        for (const auto& [lead, p] : it->second) {
          if (lead > pos) continue;
          const size_t start = pos - lead;
          if (MatchesAt(lowered, start, p->text)) raw.push_back({start, p->text.size(), p});
        }
      }
      pos = end;
    }
    per_doc[static_cast<size_t>(i)] = Finalize(doc, std::move(raw));
  }
  return Merge(corpus, std::move(per_doc));
}

std::vector<PhiHit> ScanForPhiReference(const Corpus& corpus, const PhiTable& table,
                                        const std::set<HipaaCategory>& categories) {
  const std::vector<Pattern> patterns = BuildPatterns(table, categories);
  std::vector<std::vector<PhiHit>> per_doc(corpus.documents.size());
  for (size_t i = 0; i < corpus.documents.size(); ++i) {
    const Document& doc = corpus.documents[i];
    const std::string lowered = ToLowerAscii(doc.text);
    std::vector<RawHit> raw;
    for (const Pattern& p : patterns) {
      for (size_t at = lowered.find(p.text); at != std::string::npos;
           at = lowered.find(p.text, at + 1)) {
        if (MatchesAt(lowered, at, p.text)) raw.push_back({at, p.text.size(), &p});
      }
    }
    per_doc[i] = Finalize(doc, std::move(raw));
  }
  return Merge(corpus, std::move(per_doc));
}

}  // namespace kart
