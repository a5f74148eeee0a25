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

#include <cmath>

#include "lnm/error.hpp"
#include "lnm/rng.hpp"

namespace lnm {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidVolume: return "invalid-volume";
    case ErrorCode::kEmptyMask: return "empty-mask";
    case ErrorCode::kEmptyShell: return "empty-shell";
    case ErrorCode::kEmptySlice: return "empty-slice";
    case ErrorCode::kOutOfBounds: return "out-of-bounds";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kDegenerateRoi: return "degenerate-roi";
    case ErrorCode::kDegenerateTraining: return "degenerate-training";
    case ErrorCode::kConvergence: return "convergence";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kNumericFault: return "numeric-fault";
    case ErrorCode::kTuning: return "tuning";
    case ErrorCode::kDegenerateLabels: return "degenerate-labels";
    case ErrorCode::kInfeasiblePlan: return "infeasible-plan";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kGeneration: return "generation";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

double draw_normal(Rng& rng, double mean, double sd) {
  double u1 = draw_unit(rng);
  while (u1 <= 0.0) u1 = draw_unit(rng);
  const double u2 = draw_unit(rng);
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace lnm
