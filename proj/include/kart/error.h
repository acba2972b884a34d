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

#ifndef KART_ERROR_H_
#define KART_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace kart {

// Failure classes surfaced by the harness. The CLI maps each one onto an
// exit code: validation/configuration classes exit 1, I/O and wire-protocol
// classes exit 2.
enum class ErrorKind {
  kConfiguration,
  kValidation,
  kParse,
  kTemplate,
  kSize,
  kDataIntegrity,
  kUnknownToken,
  kUnsupported,
  kDegenerate,
  kScenario,
  kPlanResource,
  kConsistency,
  kUndefinedMetric,
  kTraining,
  kIo,
  kProtocol,
  kTransport,
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const { return kind_; }
  // Transport failures may succeed when retried; nothing else will.
  bool retryable() const { return kind_ == ErrorKind::kTransport; }

 private:
  ErrorKind kind_;
};

int ExitCodeFor(ErrorKind kind);

}  // namespace kart

#endif  // KART_ERROR_H_
