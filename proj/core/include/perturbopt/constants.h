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

// Third-order smoothness constants of an objective over a local set.

#ifndef PERTURBOPT_CONSTANTS_H_
#define PERTURBOPT_CONSTANTS_H_

#include <optional>
#include <string_view>

namespace perturbopt {

enum class NormTag { kL2, kLInf };

enum class EstimateMethod {
  kSupplied,    // given by the caller
  kExact,       // exact per-coordinate sup
  kEnvelope,    // rigorous upper bound
  kMonteCarlo,  // sampled lower estimate
};

std::string_view NormTagName(NormTag tag);
std::string_view EstimateMethodName(EstimateMethod method);

// Radii of the local set. Sup-norm constants use a single radius and keep
// target == nuisance.
struct Radii {
  double target = 0;
  double nuisance = 0;

  static Radii Uniform(double r) { return {r, r}; }
  double Max() const { return target > nuisance ? target : nuisance; }
};

struct ConditionConstants {
  double tau3 = 0;
  double d12 = 0;
  double d21 = 0;
  NormTag norm = NormTag::kL2;
  Radii radii;
  // Set when the metric only satisfies D^2 <= kappa^2 F.
  std::optional<double> kappa;
  EstimateMethod method = EstimateMethod::kSupplied;

  // Validates nonnegativity and kappa >= 1.
  void Validate() const;
};

}  // namespace perturbopt

#endif  // PERTURBOPT_CONSTANTS_H_
