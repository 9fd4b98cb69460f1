// Copyright 2026 The PerturbOpt Authors.
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

#include "perturbopt/error.h"

namespace perturbopt {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotPositiveDefinite:
      return "NotPositiveDefinite";
    case ErrorCode::kNotSymmetric:
      return "NotSymmetric";
    case ErrorCode::kNoConvergence:
      return "NoConvergence";
    case ErrorCode::kSingularMatrix:
      return "SingularMatrix";
    case ErrorCode::kDimensionMismatch:
      return "DimensionMismatch";
    case ErrorCode::kRhoNotLessThanOne:
      return "RhoNotLessThanOne";
    case ErrorCode::kHessianNotPD:
      return "HessianNotPD";
    case ErrorCode::kInnerSolveFailed:
      return "InnerSolveFailed";
    case ErrorCode::kMetricDominanceViolated:
      return "MetricDominanceViolated";
    case ErrorCode::kInsufficientSteps:
      return "InsufficientSteps";
    case ErrorCode::kDltwbTooLarge:
      return "DltwbTooLarge";
    case ErrorCode::kIoError:
      return "IoError";
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace perturbopt
