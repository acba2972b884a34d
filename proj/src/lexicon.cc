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

#include "kart/lexicon.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "kart/error.h"
#include "kart/io.h"

namespace kart {
namespace {

std::string Trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

void SortNames(std::vector<WeightedName>& names) {
  std::sort(names.begin(), names.end(), [](const WeightedName& a, const WeightedName& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.name < b.name;
  });
}

std::unordered_map<std::string, size_t> IndexNames(const std::vector<WeightedName>& names,
                                                   std::string_view which) {
  std::unordered_map<std::string, size_t> index;
  for (size_t i = 0; i < names.size(); ++i) {
    if (!(names[i].weight > 0.0) || !std::isfinite(names[i].weight)) {
      throw Error(ErrorKind::kConfiguration,
                  fmt::format("{} name '{}' has non-positive weight", which, names[i].name));
    }
    if (!index.emplace(names[i].name, i).second) {
      throw Error(ErrorKind::kConfiguration, fmt::format("duplicate {} name '{}'", which, names[i].name));
    }
  }
  return index;
}

std::vector<WeightedName> FilterSingleToken(const std::vector<WeightedName>& table,
                                            const Tokenizer& tokenizer) {
  std::vector<WeightedName> kept;
  for (const WeightedName& n : table) {
    if (!IsSingleToken(n.name, tokenizer)) continue;
    // Store the normalized token form so lookups match tokenized text.
    kept.push_back({tokenizer.Words(n.name).front(), n.weight});
  }
  return kept;
}

MarginalDistribution Normalized(const std::vector<WeightedName>& names) {
  MarginalDistribution d;
  double total = 0.0;
  for (const WeightedName& n : names) total += n.weight;
  for (const WeightedName& n : names) {
    d.names.push_back(n.name);
    d.probs.push_back(n.weight / total);
  }
  return d;
}

bool IsWordChar(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<WeightedName> ReadFrequencyTable(std::istream& in) {
  std::vector<WeightedName> out;
  bool header = true;
  ForEachLine(in, [&](std::string_view line, size_t number) {
    if (header) {
      header = false;
      return;
    }
    const size_t comma = line.rfind(',');
    if (comma == std::string_view::npos) {
      throw Error(ErrorKind::kParse, fmt::format("line {}: expected name,weight", number));
    }
    WeightedName n;
    n.name = Trim(line.substr(0, comma));
    const std::string weight = Trim(line.substr(comma + 1));
    try {
      size_t used = 0;
      n.weight = std::stod(weight, &used);
      if (used != weight.size()) throw std::invalid_argument(weight);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kParse, fmt::format("line {}: bad weight '{}'", number, weight));
    }
    if (n.name.empty()) throw Error(ErrorKind::kParse, fmt::format("line {}: empty name", number));
    out.push_back(std::move(n));
  });
  return out;
}

std::vector<WeightedName> LoadFrequencyTable(const std::filesystem::path& path) {
  std::istringstream in(ReadFile(path));
  return ReadFrequencyTable(in);
}

NameLexicon::NameLexicon(std::vector<WeightedName> first_names, std::vector<WeightedName> last_names)
    : first_(std::move(first_names)), last_(std::move(last_names)) {
  SortNames(first_);
  SortNames(last_);
  first_index_ = IndexNames(first_, "first");
  last_index_ = IndexNames(last_, "last");
}

std::optional<size_t> NameLexicon::FirstIndex(std::string_view name) const {
  auto it = first_index_.find(std::string(name));
  if (it == first_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<size_t> NameLexicon::LastIndex(std::string_view name) const {
  auto it = last_index_.find(std::string(name));
  if (it == last_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> NameLexicon::FirstNameStrings() const {
  std::vector<std::string> out;
  for (const auto& n : first_) out.push_back(n.name);
  return out;
}

std::vector<std::string> NameLexicon::LastNameStrings() const {
  std::vector<std::string> out;
  for (const auto& n : last_) out.push_back(n.name);
  return out;
}

NameLexicon BuildNameLexicon(const std::vector<WeightedName>& first_table,
                             const std::vector<WeightedName>& last_table,
                             const Tokenizer& tokenizer) {
  if (first_table.empty() || last_table.empty()) {
    throw Error(ErrorKind::kConfiguration, "name frequency tables must be non-empty");
  }
  auto first = FilterSingleToken(first_table, tokenizer);
  auto last = FilterSingleToken(last_table, tokenizer);
  if (first.empty() || last.empty()) {
    throw Error(ErrorKind::kConfiguration,
                fmt::format("no single-token names left (first: {}, last: {})", first.size(),
                            last.size()));
  }
  return NameLexicon(std::move(first), std::move(last));
}

NameLexicon LoadDefaultNameLexicon(const Tokenizer& tokenizer) {
  const auto dir = DataDirectory();
  return BuildNameLexicon(LoadFrequencyTable(dir / "first_names.csv"),
                          LoadFrequencyTable(dir / "last_names.csv"), tokenizer);
}

FactoredDistribution PopularityPrior(const NameLexicon& lexicon) {
  return {Normalized(lexicon.first_names()), Normalized(lexicon.last_names())};
}

std::vector<std::string> LoadWordList(const std::filesystem::path& path) {
  std::vector<std::string> out;
  std::istringstream in(ReadFile(path));
  ForEachLine(in, [&](std::string_view line, size_t) {
    std::string item = Trim(line);
    if (!item.empty() && item.front() != '#') out.push_back(std::move(item));
  });
  return out;
}

ClinicalLexicon LoadDefaultClinicalLexicon() {
  const auto dir = DataDirectory();
  return {LoadWordList(dir / "conditions.txt"), LoadWordList(dir / "medications.txt")};
}

std::vector<std::string> FindConditions(std::string_view text, const ClinicalLexicon& lexicon) {
  const std::string lower = ToLowerAscii(text);
  std::vector<std::string> found;
  for (const std::string& condition : lexicon.conditions) {
    const std::string needle = ToLowerAscii(condition);
    size_t pos = lower.find(needle);
    while (pos != std::string::npos) {
      const bool left_ok = pos == 0 || !IsWordChar(lower[pos - 1]);
      const size_t end = pos + needle.size();
      const bool right_ok = end == lower.size() || !IsWordChar(lower[end]);
      if (left_ok && right_ok) {
        found.push_back(condition);
        break;
      }
      pos = lower.find(needle, pos + 1);
    }
  }
  return found;
}

}  // namespace kart
