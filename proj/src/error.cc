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

#include "kart/error.h"

#include <fmt/format.h>

namespace kart {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfiguration: return "configuration error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kTemplate: return "template error";
    case ErrorKind::kSize: return "size error";
    case ErrorKind::kDataIntegrity: return "data-integrity error";
    case ErrorKind::kUnknownToken: return "unknown-token error";
    case ErrorKind::kUnsupported: return "unsupported-capability error";
    case ErrorKind::kDegenerate: return "degenerate-distribution error";
    case ErrorKind::kScenario: return "scenario-violation error";
    case ErrorKind::kPlanResource: return "plan-resource error";
    case ErrorKind::kConsistency: return "consistency error";
    case ErrorKind::kUndefinedMetric: return "undefined-metric error";
    case ErrorKind::kTraining: return "training error";
    case ErrorKind::kIo: return "I/O error";
    case ErrorKind::kProtocol: return "protocol error";
    case ErrorKind::kTransport: return "transport error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", ErrorKindName(kind), message)),
      kind_(kind) {}

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo:
    case ErrorKind::kProtocol:
    case ErrorKind::kTransport:
      return 2;
    default:
      return 1;
  }
}

}  // namespace kart
