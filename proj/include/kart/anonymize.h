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

#ifndef KART_ANONYMIZE_H_
#define KART_ANONYMIZE_H_

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kart/corpus.h"
#include "kart/phi.h"

namespace kart {

enum class AnonymizerKind { kId, kHipaa, kCustom };

struct AnonymizationOp {
  AnonymizerKind kind = AnonymizerKind::kId;
  std::set<HipaaCategory> masked_categories;
  std::string mask_token = std::string(kDefaultMaskToken);

  static AnonymizationOp Identity();
  static AnonymizationOp Hipaa();
  // A custom set equal to the full 18-set is normalized to kind=hipaa and an
  // empty one to kind=id, so the kind/category invariant always holds.
  static AnonymizationOp Custom(std::set<HipaaCategory> categories);

  // "id", "hipaa" or "custom:names+phone".
  std::string Describe() const;
  static AnonymizationOp Parse(std::string_view description);

  // Throws kValidation when kind and masked_categories disagree.
  void Validate() const;

  bool operator==(const AnonymizationOp&) const = default;
};

Corpus ApplyAnonymizer(const Corpus& corpus, const AnonymizationOp& op);

struct PhiHit {
  std::string doc_id;
  size_t offset = 0;
  HipaaCategory category = HipaaCategory::kNames;
  int patient_id = 0;

  bool operator==(const PhiHit&) const = default;
};

// Case-insensitive search for every gold attribute string of the requested
// categories. A match must not be flanked by letters or digits, so a phone
// number does not match inside a longer digit run. Names are matched as full
// names and, outside full-name matches, as single first or last names.
std::vector<PhiHit> ScanForPhi(const Corpus& corpus, const PhiTable& table,
                               const std::set<HipaaCategory>& categories);

// Serial reference for ScanForPhi: checks every pattern at every offset.
std::vector<PhiHit> ScanForPhiReference(const Corpus& corpus, const PhiTable& table,
                                        const std::set<HipaaCategory>& categories);

}  // namespace kart

#endif  // KART_ANONYMIZE_H_
