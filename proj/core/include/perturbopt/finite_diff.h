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

#ifndef PERTURBOPT_FINITE_DIFF_H_
#define PERTURBOPT_FINITE_DIFF_H_

#include <cstdint>
#include <span>

#include "perturbopt/smooth_objective.h"

namespace perturbopt {

// Errors are |analytic - differenced|_inf / max(1, |differenced|_inf).
struct FiniteDiffReport {
  double step = 0;
  double grad_err = 0;
  double hess_err = 0;
  double third_err = 0;
};

// Central differences with h = 1e-5 (1 + |x|_inf). The third derivative is
// checked along three random direction triples drawn from `seed`.
FiniteDiffReport FiniteDiffCheck(const SmoothObjective& f,
                                 std::span<const double> x,
                                 std::uint64_t seed = 0);

}  // namespace perturbopt

#endif  // PERTURBOPT_FINITE_DIFF_H_
