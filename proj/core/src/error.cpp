/* Copyright 2026 The Robometer Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "robometer/error.hpp"

namespace robometer {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::kIo: return "E_IO";
    case ErrorCode::kBadMagic: return "E_BAD_MAGIC";
    case ErrorCode::kUnknownDtype: return "E_UNKNOWN_DTYPE";
    case ErrorCode::kTruncated: return "E_TRUNCATED";
    case ErrorCode::kFormat: return "E_FORMAT";
    case ErrorCode::kDimensionMismatch: return "E_DIMENSION_MISMATCH";
    case ErrorCode::kProtocol: return "E_PROTOCOL";
    case ErrorCode::kTimeout: return "E_TIMEOUT";
    case ErrorCode::kAdapter: return "E_ADAPTER";
    case ErrorCode::kNumerical: return "E_NUMERICAL";
    case ErrorCode::kMissingArtifact: return "E_MISSING_ARTIFACT";
    case ErrorCode::kInsufficientData: return "E_INSUFFICIENT_DATA";
  }
  return "E_UNKNOWN";
}

}  // namespace robometer
