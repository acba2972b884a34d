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

#ifndef KART_LEXICON_H_
#define KART_LEXICON_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kart/tokenizer.h"

namespace kart {

struct WeightedName {
  std::string name;
  double weight = 0.0;

  bool operator==(const WeightedName&) const = default;
};

// Reads a "name,weight" CSV with a header row.
std::vector<WeightedName> ReadFrequencyTable(std::istream& in);
std::vector<WeightedName> LoadFrequencyTable(const std::filesystem::path& path);

// First-name set U and last-name set V, each sorted by descending weight and
// then lexicographically. Every name is a single token under the tokenizer
// the lexicon was built with.
class NameLexicon {
 public:
  NameLexicon() = default;
  NameLexicon(std::vector<WeightedName> first_names, std::vector<WeightedName> last_names);

  const std::vector<WeightedName>& first_names() const { return first_; }
  const std::vector<WeightedName>& last_names() const { return last_; }
  size_t GridSize() const { return first_.size() * last_.size(); }

  std::optional<size_t> FirstIndex(std::string_view name) const;
  std::optional<size_t> LastIndex(std::string_view name) const;
  bool Contains(std::string_view first, std::string_view last) const {
    return FirstIndex(first) && LastIndex(last);
  }

  std::vector<std::string> FirstNameStrings() const;
  std::vector<std::string> LastNameStrings() const;

 private:
  std::vector<WeightedName> first_;
  std::vector<WeightedName> last_;
  std::unordered_map<std::string, size_t> first_index_;
  std::unordered_map<std::string, size_t> last_index_;
};

// Drops names that are not single tokens, sorts, and rejects empty results.
NameLexicon BuildNameLexicon(const std::vector<WeightedName>& first_table,
                             const std::vector<WeightedName>& last_table,
                             const Tokenizer& tokenizer);

NameLexicon LoadDefaultNameLexicon(const Tokenizer& tokenizer = Tokenizer());

// A probability vector over a list of names.
struct MarginalDistribution {
  std::vector<std::string> names;
  std::vector<double> probs;

  bool operator==(const MarginalDistribution&) const = default;
};

// Joint distribution over U x V that factorizes into first/last marginals.
struct FactoredDistribution {
  MarginalDistribution first;
  MarginalDistribution last;
};

// P(u_j, v_k) proportional to weight(u_j) * weight(v_k), normalized over the grid.
FactoredDistribution PopularityPrior(const NameLexicon& lexicon);

// Condition and medication vocabularies used to build and read PMH.
struct ClinicalLexicon {
  std::vector<std::string> conditions;
  std::vector<std::string> medications;
};

std::vector<std::string> LoadWordList(const std::filesystem::path& path);
ClinicalLexicon LoadDefaultClinicalLexicon();

// Every lexicon condition occurring in `text` as a whole phrase
// (case-insensitive), in lexicon order.
std::vector<std::string> FindConditions(std::string_view text, const ClinicalLexicon& lexicon);

}  // namespace kart

#endif  // KART_LEXICON_H_
