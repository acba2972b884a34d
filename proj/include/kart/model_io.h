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

#ifndef KART_MODEL_IO_H_
#define KART_MODEL_IO_H_

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "kart/scorer.h"

namespace kart {

// params.bin layout, all integers little-endian:
//   "KARTM\0" | u16 version | u32 array count
//   per array: u16 name length | name | u8 dtype (0 f32, 1 i32) | u64 count | data
inline constexpr uint16_t kParamsVersion = 1;

std::string EncodeParams(const std::vector<ParamArray>& arrays);
std::vector<ParamArray> DecodeParams(std::string_view bytes);

// Writes manifest.toml, vocab.txt and params.bin under `dir`, each file
// atomically.
void SaveModel(const ScorerModel& model, const std::filesystem::path& dir);
std::unique_ptr<ScorerModel> LoadModel(const std::filesystem::path& dir);

}  // namespace kart

#endif  // KART_MODEL_IO_H_
