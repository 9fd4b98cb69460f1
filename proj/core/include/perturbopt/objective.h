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

// Concrete objectives, perturbation wrappers and the convex solvers.

#ifndef PERTURBOPT_OBJECTIVE_H_
#define PERTURBOPT_OBJECTIVE_H_

#include <functional>
#include <span>
#include <vector>

#include "perturbopt/matrix.h"
#include "perturbopt/smooth_objective.h"
#include "perturbopt/tolerances.h"

namespace perturbopt {

// f(x) = (x - m)^T F (x - m) / 2 with F positive definite.
class QuadraticObjective final : public SmoothObjective {
 public:
  QuadraticObjective(Vector minimizer, SymMatrix curvature);

  const Vector& minimizer() const { return minimizer_; }
  const SymMatrix& curvature() const { return curvature_; }

  std::size_t dim() const override { return minimizer_.size(); }
  double Value(std::span<const double> x) const override;
  Vector Gradient(std::span<const double> x) const override;
  SymMatrix Hessian(std::span<const double> x) const override;
  double ThirdDirectional(std::span<const double> x, std::span<const double> a,
                          std::span<const double> b,
                          std::span<const double> c) const override;

 private:
  Vector minimizer_;
  SymMatrix curvature_;
};

// g(x) = f(x) + <A, x>
class LinearPerturbation final : public SmoothObjective {
 public:
  LinearPerturbation(ObjectivePtr base, Vector a);

  const Vector& shift() const { return a_; }

  std::size_t dim() const override { return base_->dim(); }
  double Value(std::span<const double> x) const override;
  Vector Gradient(std::span<const double> x) const override;
  SymMatrix Hessian(std::span<const double> x) const override;
  double ThirdDirectional(std::span<const double> x, std::span<const double> a,
                          std::span<const double> b,
                          std::span<const double> c) const override;
  double Partial(std::span<const double> x, std::size_t i) const override;
  double Partial2(std::span<const double> x, std::size_t i) const override;

 private:
  ObjectivePtr base_;
  Vector a_;
};

ObjectivePtr LinearPerturb(ObjectivePtr f, Vector a);

// A scalar function with its first three derivatives.
struct ScalarFunction {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::function<double(double)> d3;

  static ScalarFunction Zero();
  // lambda (x - center)^2 / 2
  static ScalarFunction Ridge(double lambda, double center = 0.0);
};

using SeparableSpec = std::vector<ScalarFunction>;

// g(x) = f(x) + sum_j t_j(x_j)
class SeparablePerturbation final : public SmoothObjective {
 public:
  SeparablePerturbation(ObjectivePtr base, SeparableSpec t);

  const SeparableSpec& terms() const { return t_; }

  std::size_t dim() const override { return base_->dim(); }
  double Value(std::span<const double> x) const override;
  Vector Gradient(std::span<const double> x) const override;
  SymMatrix Hessian(std::span<const double> x) const override;
  double ThirdDirectional(std::span<const double> x, std::span<const double> a,
                          std::span<const double> b,
                          std::span<const double> c) const override;
  double Partial(std::span<const double> x, std::size_t i) const override;
  double Partial2(std::span<const double> x, std::size_t i) const override;

 private:
  ObjectivePtr base_;
  SeparableSpec t_;
};

ObjectivePtr SeparablePerturb(ObjectivePtr f, SeparableSpec t);

// f restricted to the coordinates `free_idx`, the others frozen at `point`.
// Holds a non-owning pointer; `base` must outlive the restriction.
class BlockRestriction final : public SmoothObjective {
 public:
  BlockRestriction(const SmoothObjective& base,
                   std::vector<std::size_t> free_idx, Vector point);

  Vector Embed(std::span<const double> free) const;

  std::size_t dim() const override { return free_.size(); }
  double Value(std::span<const double> x) const override;
  Vector Gradient(std::span<const double> x) const override;
  SymMatrix Hessian(std::span<const double> x) const override;
  double ThirdDirectional(std::span<const double> x, std::span<const double> a,
                          std::span<const double> b,
                          std::span<const double> c) const override;
  double Partial(std::span<const double> x, std::size_t i) const override;
  double Partial2(std::span<const double> x, std::size_t i) const override;

 private:
  Vector EmbedDirection(std::span<const double> d) const;

  const SmoothObjective* base_;
  std::vector<std::size_t> free_;
  Vector point_;
};

enum class SolveStatus {
  kConverged,
  kMaxIterations,
  kStalled,      // no further decrease representable in floating point
  kNoMinimizer,  // a coordinate search found no sign change
};

struct SolveReport {
  Vector argmin;
  int iterations = 0;
  double final_grad_supnorm = 0;
  bool converged = false;
  SolveStatus status = SolveStatus::kMaxIterations;
  // Filled when requested: iterates and objective values. Newton records one
  // entry per step, coordinate descent one per coordinate update.
  std::vector<Vector> trajectory;
  std::vector<double> values;
};

// Converged, or stalled within 100 tol once f no longer resolves the
// decrease.
bool SolveSucceeded(const SolveReport& r, double tol);

struct NewtonOptions {
  double tol = tol::kSolverGradient;
  int max_iter = tol::kNewtonMaxIter;
  bool record_trajectory = false;
};

// Damped Newton with Armijo backtracking. Throws kHessianNotPD when the
// Hessian at an iterate is not positive definite.
SolveReport NewtonMinimize(const SmoothObjective& f, std::span<const double> x0,
                           const NewtonOptions& options = {});

struct CoordinateOptions {
  double tol = tol::kSolverGradient;
  int max_sweeps = tol::kCoordinateMaxSweeps;
  bool record_trajectory = false;
};

// Cyclic exact coordinate minimization with a safeguarded 1-D Newton search.
SolveReport CoordinateDescentMinimize(const SmoothObjective& f,
                                      std::span<const double> x0,
                                      const CoordinateOptions& options = {});

enum class FixedBlock { kTarget, kNuisance };

// Minimizes over the free block with the other block fixed at `fixed_value`.
// The returned argmin has the dimension of the free block.
SolveReport PartialMinimize(const SmoothObjective& f, const BlockSplit& split,
                            FixedBlock fixed,
                            std::span<const double> fixed_value,
                            std::span<const double> warm_start,
                            double tol = tol::kSolverGradient);

}  // namespace perturbopt

#endif  // PERTURBOPT_OBJECTIVE_H_
