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

#ifndef KART_CLI_H_
#define KART_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace kart {

// Runs one `kart` invocation. `args` excludes the program name. Returns the
// process exit code: 0 on success, 1 for usage, validation and configuration
// errors, 2 for I/O and protocol errors.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kart

#endif  // KART_CLI_H_
