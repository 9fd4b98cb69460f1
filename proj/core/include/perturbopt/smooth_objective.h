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

#ifndef PERTURBOPT_SMOOTH_OBJECTIVE_H_
#define PERTURBOPT_SMOOTH_OBJECTIVE_H_

#include <cstddef>
#include <memory>
#include <span>

#include "perturbopt/matrix.h"

namespace perturbopt {

// A three times differentiable function on R^dim. Implementations are
// immutable and safe to share across threads.
class SmoothObjective {
 public:
  virtual ~SmoothObjective() = default;

  virtual std::size_t dim() const = 0;
  virtual double Value(std::span<const double> x) const = 0;
  virtual Vector Gradient(std::span<const double> x) const = 0;
  virtual SymMatrix Hessian(std::span<const double> x) const = 0;
  // <nabla^3 f(x), a (x) b (x) c>
  virtual double ThirdDirectional(std::span<const double> x,
                                  std::span<const double> a,
                                  std::span<const double> b,
                                  std::span<const double> c) const = 0;

  // Single gradient entry and Hessian diagonal entry. Overridden where a
  // cheaper evaluation exists; used by coordinate descent.
  virtual double Partial(std::span<const double> x, std::size_t i) const {
    return Gradient(x)[i];
  }
  virtual double Partial2(std::span<const double> x, std::size_t i) const {
    return Hessian(x)(i, i);
  }
};

using ObjectivePtr = std::shared_ptr<const SmoothObjective>;

}  // namespace perturbopt

#endif  // PERTURBOPT_SMOOTH_OBJECTIVE_H_
