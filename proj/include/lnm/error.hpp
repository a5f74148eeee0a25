//  Copyright 2026 The lnm Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.
//

#pragma once

#include <stdexcept>
#include <string>

namespace lnm {

// Values mirror the LNM_E* codes of the C API.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kInvalidVolume = 2,
  kEmptyMask = 3,
  kEmptyShell = 4,
  kEmptySlice = 5,
  kOutOfBounds = 6,
  kPrecondition = 7,
  kDegenerateRoi = 8,
  kDegenerateTraining = 9,
  kConvergence = 10,
  kDivergence = 11,
  kNumericFault = 12,
  kTuning = 13,
  kDegenerateLabels = 14,
  kInfeasiblePlan = 15,
  kParse = 16,
  kIo = 17,
  kGeneration = 18,
  kInternal = 99,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace lnm
