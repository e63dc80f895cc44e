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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vskin {

enum class ErrorCode {
  kDegenerateDirection,
  kParallelAxes,
  kCyclicHierarchy,
  kMultipleRoots,
  kForwardParentReference,
  kNoRoot,
  kInvalidMesh,
  kEmptyTrack,
  kNonPositiveDt,
  kEmptyHistory,
  kParseError,
  kVersionMismatch,
  kReferentialIntegrity,
  kIoError,
  kInvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library. The code identifies the failure
// class; the message carries the context (field path, bone index, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace vskin
