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

#ifndef KART_IO_H_
#define KART_IO_H_

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

namespace kart {

std::string ReadFile(const std::filesystem::path& path);

// Writes through a sibling temporary file and renames it into place, so a
// reader never observes a partially written output.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view contents);
void WriteFileAtomic(const std::filesystem::path& path,
                     const std::function<void(std::ostream&)>& writer);

// Calls `fn(line, line_number)` for every non-empty line (1-based numbers).
void ForEachLine(std::istream& in,
                 const std::function<void(std::string_view, size_t)>& fn);

std::string Sha256Hex(std::string_view data);

// Directory holding the shipped lexicons and templates. KART_DATA_DIR in the
// environment overrides the compiled-in default.
std::filesystem::path DataDirectory();

}  // namespace kart

#endif  // KART_IO_H_
