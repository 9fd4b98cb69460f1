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

#include "perturbopt/objective.h"

#include <string>
#include <utility>

#include "perturbopt/error.h"
#include "perturbopt/linalg.h"

namespace perturbopt {
namespace {

void CheckDim(std::size_t expected, std::size_t got, const char* where) {
  Require(expected == got, ErrorCode::kDimensionMismatch,
          std::string(where) + ": expected dimension " +
              std::to_string(expected) + ", got " + std::to_string(got));
}

}  // namespace

QuadraticObjective::QuadraticObjective(Vector minimizer, SymMatrix curvature)
    : minimizer_(std::move(minimizer)), curvature_(std::move(curvature)) {
  CheckDim(curvature_.dim(), minimizer_.size(), "QuadraticObjective");
  Cholesky::Factor(curvature_);
}

double QuadraticObjective::Value(std::span<const double> x) const {
  CheckDim(dim(), x.size(), "QuadraticObjective::Value");
  const Vector d = Sub(x, minimizer_);
  return 0.5 * Bilinear(curvature_, d, d);
}

Vector QuadraticObjective::Gradient(std::span<const double> x) const {
  CheckDim(dim(), x.size(), "QuadraticObjective::Gradient");
  return MatVec(curvature_, Sub(x, minimizer_));
}

SymMatrix QuadraticObjective::Hessian(std::span<const double> x) const {
  CheckDim(dim(), x.size(), "QuadraticObjective::Hessian");
  return curvature_;
}

double QuadraticObjective::ThirdDirectional(std::span<const double>,
                                            std::span<const double>,
                                            std::span<const double>,
                                            std::span<const double>) const {
  return 0.0;
}

LinearPerturbation::LinearPerturbation(ObjectivePtr base, Vector a)
    : base_(std::move(base)), a_(std::move(a)) {
  Require(base_ != nullptr, ErrorCode::kInvalidArgument, "null objective");
  CheckDim(base_->dim(), a_.size(), "LinearPerturbation");
}

double LinearPerturbation::Value(std::span<const double> x) const {
  return base_->Value(x) + Dot(a_, x);
}

Vector LinearPerturbation::Gradient(std::span<const double> x) const {
  return AddV(base_->Gradient(x), a_);
}

SymMatrix LinearPerturbation::Hessian(std::span<const double> x) const {
  return base_->Hessian(x);
}

double LinearPerturbation::ThirdDirectional(std::span<const double> x,
                                            std::span<const double> a,
                                            std::span<const double> b,
                                            std::span<const double> c) const {
  return base_->ThirdDirectional(x, a, b, c);
}

double LinearPerturbation::Partial(std::span<const double> x,
                                   std::size_t i) const {
  return base_->Partial(x, i) + a_[i];
}

double LinearPerturbation::Partial2(std::span<const double> x,
                                    std::size_t i) const {
  return base_->Partial2(x, i);
}

ObjectivePtr LinearPerturb(ObjectivePtr f, Vector a) {
  return std::make_shared<LinearPerturbation>(std::move(f), std::move(a));
}

ScalarFunction ScalarFunction::Zero() {
  auto zero = [](double) { return 0.0; };
  return {zero, zero, zero, zero};
}

ScalarFunction ScalarFunction::Ridge(double lambda, double center) {
  Require(lambda >= 0.0, ErrorCode::kInvalidArgument,
          "ridge weight must be nonnegative");
  return {[=](double x) { return 0.5 * lambda * (x - center) * (x - center); },
          [=](double x) { return lambda * (x - center); },
          [=](double) { return lambda; }, [](double) { return 0.0; }};
}

SeparablePerturbation::SeparablePerturbation(ObjectivePtr base, SeparableSpec t)
    : base_(std::move(base)), t_(std::move(t)) {
  Require(base_ != nullptr, ErrorCode::kInvalidArgument, "null objective");
  CheckDim(base_->dim(), t_.size(), "SeparablePerturbation");
}

double SeparablePerturbation::Value(std::span<const double> x) const {
  double v = base_->Value(x);
  for (std::size_t j = 0; j < t_.size(); ++j) v += t_[j].value(x[j]);
  return v;
}

Vector SeparablePerturbation::Gradient(std::span<const double> x) const {
  Vector g = base_->Gradient(x);
  for (std::size_t j = 0; j < t_.size(); ++j) g[j] += t_[j].d1(x[j]);
  return g;
}

SymMatrix SeparablePerturbation::Hessian(std::span<const double> x) const {
  SymMatrix h = base_->Hessian(x);
  for (std::size_t j = 0; j < t_.size(); ++j) h.Add(j, j, t_[j].d2(x[j]));
  return h;
}

double SeparablePerturbation::ThirdDirectional(
    std::span<const double> x, std::span<const double> a,
    std::span<const double> b, std::span<const double> c) const {
  double v = base_->ThirdDirectional(x, a, b, c);
  for (std::size_t j = 0; j < t_.size(); ++j)
    v += t_[j].d3(x[j]) * a[j] * b[j] * c[j];
  return v;
}

double SeparablePerturbation::Partial(std::span<const double> x,
                                      std::size_t i) const {
  return base_->Partial(x, i) + t_[i].d1(x[i]);
}

double SeparablePerturbation::Partial2(std::span<const double> x,
                                       std::size_t i) const {
  return base_->Partial2(x, i) + t_[i].d2(x[i]);
}

ObjectivePtr SeparablePerturb(ObjectivePtr f, SeparableSpec t) {
  return std::make_shared<SeparablePerturbation>(std::move(f), std::move(t));
}

BlockRestriction::BlockRestriction(const SmoothObjective& base,
                                   std::vector<std::size_t> free_idx,
                                   Vector point)
    : base_(&base), free_(std::move(free_idx)), point_(std::move(point)) {
  CheckDim(base.dim(), point_.size(), "BlockRestriction");
  for (std::size_t i : free_)
    Require(i < point_.size(), ErrorCode::kInvalidArgument,
            "restriction index out of range");
}

Vector BlockRestriction::Embed(std::span<const double> free) const {
  CheckDim(free_.size(), free.size(), "BlockRestriction::Embed");
  Vector x = point_;
  for (std::size_t i = 0; i < free_.size(); ++i) x[free_[i]] = free[i];
  return x;
}

Vector BlockRestriction::EmbedDirection(std::span<const double> d) const {
  CheckDim(free_.size(), d.size(), "BlockRestriction direction");
  Vector x(point_.size(), 0.0);
  for (std::size_t i = 0; i < free_.size(); ++i) x[free_[i]] = d[i];
  return x;
}

double BlockRestriction::Value(std::span<const double> x) const {
  return base_->Value(Embed(x));
}

Vector BlockRestriction::Gradient(std::span<const double> x) const {
  return Gather(base_->Gradient(Embed(x)), free_);
}

SymMatrix BlockRestriction::Hessian(std::span<const double> x) const {
  return Submatrix(base_->Hessian(Embed(x)), free_);
}

double BlockRestriction::ThirdDirectional(std::span<const double> x,
                                          std::span<const double> a,
                                          std::span<const double> b,
                                          std::span<const double> c) const {
  return base_->ThirdDirectional(Embed(x), EmbedDirection(a), EmbedDirection(b),
                                 EmbedDirection(c));
}

double BlockRestriction::Partial(std::span<const double> x,
                                 std::size_t i) const {
  return base_->Partial(Embed(x), free_[i]);
}

double BlockRestriction::Partial2(std::span<const double> x,
                                  std::size_t i) const {
  return base_->Partial2(Embed(x), free_[i]);
}

}  // namespace perturbopt
