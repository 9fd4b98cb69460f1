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

#include "perturbopt/finite_diff.h"

#include <algorithm>
#include <cmath>

#include "perturbopt/error.h"
#include "perturbopt/rng.h"
#include "perturbopt/tolerances.h"

namespace perturbopt {
namespace {

double RelErr(std::span<const double> analytic,
              std::span<const double> differenced) {
  return NormInf(Sub(analytic, differenced)) /
         std::max(1.0, NormInf(differenced));
}

Vector Shifted(std::span<const double> x, double h, std::span<const double> d) {
  return Axpy(x, h, d);
}

}  // namespace

FiniteDiffReport FiniteDiffCheck(const SmoothObjective& f,
                                 std::span<const double> x,
                                 std::uint64_t seed) {
  const std::size_t n = f.dim();
  Require(x.size() == n, ErrorCode::kDimensionMismatch, "FiniteDiffCheck");
  FiniteDiffReport r;
  const double h = tol::kFiniteDiffStep * (1.0 + NormInf(x));
  r.step = h;

  const Vector g = f.Gradient(x);
  const SymMatrix hess = f.Hessian(x);
  Vector g_fd(n);
  Matrix h_fd(n, n);
  Vector e(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    e[i] = 1.0;
    const Vector xp = Shifted(x, h, e);
    const Vector xm = Shifted(x, -h, e);
    g_fd[i] = (f.Value(xp) - f.Value(xm)) / (2.0 * h);
    const Vector gp = f.Gradient(xp);
    const Vector gm = f.Gradient(xm);
    for (std::size_t j = 0; j < n; ++j)
      h_fd(j, i) = (gp[j] - gm[j]) / (2.0 * h);
    e[i] = 0.0;
  }
  r.grad_err = RelErr(g, g_fd);
  r.hess_err = RelErr(hess.matrix().data(), h_fd.data());

  Rng rng(SplitMix64(seed ^ 0x5eedf00dULL));
  Vector analytic, differenced;
  for (int k = 0; k < tol::kFiniteDiffDirections; ++k) {
    Vector a(n), b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.Uniform(-1.0, 1.0);
      b[i] = rng.Uniform(-1.0, 1.0);
      c[i] = rng.Uniform(-1.0, 1.0);
    }
    analytic.push_back(f.ThirdDirectional(x, a, b, c));
    const double qp = Bilinear(f.Hessian(Shifted(x, h, c)), a, b);
    const double qm = Bilinear(f.Hessian(Shifted(x, -h, c)), a, b);
    differenced.push_back((qp - qm) / (2.0 * h));
  }
  r.third_err = RelErr(analytic, differenced);
  return r;
}

}  // namespace perturbopt
