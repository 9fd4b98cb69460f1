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

#ifndef PERTURBOPT_ERROR_H_
#define PERTURBOPT_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace perturbopt {

enum class ErrorCode {
  kNotPositiveDefinite,
  kNotSymmetric,
  kNoConvergence,
  kSingularMatrix,
  kDimensionMismatch,
  kRhoNotLessThanOne,
  kHessianNotPD,
  kInnerSolveFailed,
  kMetricDominanceViolated,
  kInsufficientSteps,
  kDltwbTooLarge,
  kIoError,
  kInvalidArgument,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception. Solver
// non-convergence is not an error; it is carried by SolveReport.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline void Require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace perturbopt

#endif  // PERTURBOPT_ERROR_H_
