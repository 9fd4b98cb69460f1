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

#include "perturbopt/constants.h"

#include <cmath>

#include "perturbopt/error.h"

namespace perturbopt {

std::string_view NormTagName(NormTag tag) {
  return tag == NormTag::kL2 ? "l2" : "linf";
}

std::string_view EstimateMethodName(EstimateMethod method) {
  switch (method) {
    case EstimateMethod::kSupplied:
      return "supplied";
    case EstimateMethod::kExact:
      return "exact";
    case EstimateMethod::kEnvelope:
      return "envelope";
    case EstimateMethod::kMonteCarlo:
      return "monte_carlo";
  }
  return "unknown";
}

void ConditionConstants::Validate() const {
  const auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  Require(ok(tau3) && ok(d12) && ok(d21), ErrorCode::kInvalidArgument,
          "condition constants must be finite and nonnegative");
  Require(ok(radii.target) && ok(radii.nuisance), ErrorCode::kInvalidArgument,
          "radii must be finite and nonnegative");
  Require(!kappa || (std::isfinite(*kappa) && *kappa >= 1.0),
          ErrorCode::kInvalidArgument, "kappa must be at least 1");
}

}  // namespace perturbopt
