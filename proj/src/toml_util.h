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

#ifndef KART_SRC_TOML_UTIL_H_
#define KART_SRC_TOML_UTIL_H_

#include <algorithm>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <fmt/format.h>

#include "kart/error.h"
#include "kart/scorer.h"
#include "toml.hpp"

namespace kart {

inline toml::table ParseToml(std::string_view text, std::string_view what) {
  try {
    return toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw Error(ErrorKind::kParse,
                fmt::format("{} line {}: {}", what, e.source().begin.line, e.description()));
  }
}

class TomlReader {
 public:
  static void CheckKeys(const toml::table& t, std::string_view where,
                        std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : t) {
      if (std::find(allowed.begin(), allowed.end(), key.str()) == allowed.end()) {
        throw Error(ErrorKind::kConfiguration,
                    fmt::format("unknown key '{}' in {}", key.str(), where));
      }
    }
  }

  template <typename T>
  static std::optional<T> Get(const toml::table& t, std::string_view key) {
    const toml::node* node = t.get(key);
    if (node == nullptr) return std::nullopt;
    if constexpr (std::is_same_v<T, double>) {
      if (auto v = node->value<double>()) return *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = node->value<std::string>()) return *v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (auto v = node->value<bool>()) return *v;
    } else {
      if (node->is_integer()) return static_cast<T>(*node->value<int64_t>());
    }
    throw Error(ErrorKind::kConfiguration, fmt::format("key '{}' has the wrong type", key));
  }

  static std::vector<std::string> Strings(const toml::table& t, std::string_view key) {
    std::vector<std::string> out;
    const toml::array* arr = t[key].as_array();
    if (arr == nullptr) {
      throw Error(ErrorKind::kConfiguration, fmt::format("key '{}' must be a string array", key));
    }
    for (const toml::node& n : *arr) {
      auto v = n.value<std::string>();
      if (!v) throw Error(ErrorKind::kConfiguration, fmt::format("key '{}' must be a string array", key));
      out.push_back(*v);
    }
    return out;
  }

  template <typename T>
  static std::vector<T> Numbers(const toml::table& t, std::string_view key) {
    std::vector<T> out;
    const toml::array* arr = t[key].as_array();
    if (arr == nullptr) {
      throw Error(ErrorKind::kConfiguration, fmt::format("key '{}' must be an array", key));
    }
    for (const toml::node& n : *arr) {
      if constexpr (std::is_floating_point_v<T>) {
        auto v = n.value<double>();
        if (!v) throw Error(ErrorKind::kConfiguration, fmt::format("key '{}' must hold numbers", key));
        out.push_back(static_cast<T>(*v));
      } else {
        if (!n.is_integer()) {
          throw Error(ErrorKind::kConfiguration, fmt::format("key '{}' must hold integers", key));
        }
        out.push_back(static_cast<T>(*n.value<int64_t>()));
      }
    }
    return out;
  }
};

// Overlays the keys present in `t` onto `config`.
inline void ReadTrainingConfig(const toml::table& t, std::string_view where, TrainingConfig& config) {
  using R = TomlReader;
  R::CheckKeys(t, where,
               {"max_sequence_length", "learning_rate", "batch_size", "steps", "seed", "model_kind",
                "embedding_dim", "smoothing_k", "tie_embeddings", "mask_rate", "parallel"});
  if (auto v = R::Get<int>(t, "max_sequence_length")) config.max_sequence_length = *v;
  if (auto v = R::Get<double>(t, "learning_rate")) config.learning_rate = *v;
  if (auto v = R::Get<int>(t, "batch_size")) config.batch_size = *v;
  if (auto v = R::Get<int>(t, "steps")) config.steps = *v;
  if (auto v = R::Get<int64_t>(t, "seed")) config.seed = static_cast<uint64_t>(*v);
  if (auto v = R::Get<std::string>(t, "model_kind")) {
    auto kind = ParseModelKind(*v);
    if (!kind) throw Error(ErrorKind::kConfiguration, fmt::format("unknown model_kind '{}'", *v));
    config.model_kind = *kind;
  }
  if (auto v = R::Get<int>(t, "embedding_dim")) config.embedding_dim = *v;
  if (auto v = R::Get<double>(t, "smoothing_k")) config.smoothing_k = *v;
  if (auto v = R::Get<bool>(t, "tie_embeddings")) config.tie_embeddings = *v;
  if (auto v = R::Get<double>(t, "mask_rate")) config.mask_rate = *v;
  if (auto v = R::Get<bool>(t, "parallel")) config.parallel = *v;
}

inline toml::table TrainingConfigTable(const TrainingConfig& c) {
  return toml::table{
      {"max_sequence_length", c.max_sequence_length},
      {"learning_rate", c.learning_rate},
      {"batch_size", c.batch_size},
      {"steps", c.steps},
      {"seed", static_cast<int64_t>(c.seed)},
      {"model_kind", std::string(ModelKindName(c.model_kind))},
      {"embedding_dim", c.embedding_dim},
      {"smoothing_k", c.smoothing_k},
      {"tie_embeddings", c.tie_embeddings},
      {"mask_rate", c.mask_rate},
      {"parallel", c.parallel},
  };
}

}  // namespace kart

#endif  // KART_SRC_TOML_UTIL_H_
