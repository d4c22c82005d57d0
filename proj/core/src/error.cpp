// Copyright 2026 The Text2Scene Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "text2scene/error.hpp"

namespace text2scene {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kAssetNotFound: return "asset-not-found";
    case ErrorCode::kParseError: return "parse-error";
    case ErrorCode::kRetrievalMiss: return "retrieval-miss";
    case ErrorCode::kNoNegativeAvailable: return "no-negative-available";
    case ErrorCode::kPlacementError: return "placement-error";
    case ErrorCode::kRenderError: return "render-error";
    case ErrorCode::kContractViolation: return "contract-violation";
    case ErrorCode::kNumericalError: return "numerical-error";
    case ErrorCode::kIoError: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace text2scene
