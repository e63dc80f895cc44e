// Copyright 2026 The vskin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vskin/error.hpp"

namespace vskin {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateDirection: return "DegenerateDirection";
    case ErrorCode::kParallelAxes: return "ParallelAxes";
    case ErrorCode::kCyclicHierarchy: return "CyclicHierarchy";
    case ErrorCode::kMultipleRoots: return "MultipleRoots";
    case ErrorCode::kForwardParentReference: return "ForwardParentReference";
    case ErrorCode::kNoRoot: return "NoRoot";
    case ErrorCode::kInvalidMesh: return "InvalidMesh";
    case ErrorCode::kEmptyTrack: return "EmptyTrack";
    case ErrorCode::kNonPositiveDt: return "NonPositiveDt";
    case ErrorCode::kEmptyHistory: return "EmptyHistory";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kReferentialIntegrity: return "ReferentialIntegrity";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace vskin
