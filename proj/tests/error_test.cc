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

#include <gtest/gtest.h>

namespace kart {
namespace {

TEST(ErrorTest, ExitCodesSplitUserErrorsFromIoErrors) {
  for (ErrorKind k : {ErrorKind::kConfiguration, ErrorKind::kValidation, ErrorKind::kParse,
                      ErrorKind::kTemplate, ErrorKind::kSize, ErrorKind::kDataIntegrity,
                      ErrorKind::kUnknownToken, ErrorKind::kUnsupported, ErrorKind::kDegenerate,
                      ErrorKind::kScenario, ErrorKind::kPlanResource, ErrorKind::kConsistency,
                      ErrorKind::kUndefinedMetric, ErrorKind::kTraining}) {
    EXPECT_EQ(ExitCodeFor(k), 1) << ErrorKindName(k);
  }
  for (ErrorKind k : {ErrorKind::kIo, ErrorKind::kProtocol, ErrorKind::kTransport}) {
    EXPECT_EQ(ExitCodeFor(k), 2) << ErrorKindName(k);
  }
}

TEST(ErrorTest, OnlyTransportFailuresAreRetryable) {
  EXPECT_TRUE(Error(ErrorKind::kTransport, "x").retryable());
  EXPECT_FALSE(Error(ErrorKind::kProtocol, "x").retryable());
  EXPECT_FALSE(Error(ErrorKind::kIo, "x").retryable());
}

TEST(ErrorTest, CarriesKindAndMessage) {
  const Error e(ErrorKind::kSize, "too big");
  EXPECT_EQ(e.kind(), ErrorKind::kSize);
  EXPECT_STREQ(e.what(), "size error: too big");
}

}  // namespace
}  // namespace kart
