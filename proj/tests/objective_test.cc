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

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>

#include "perturbopt/error.h"
#include "perturbopt/finite_diff.h"
#include "perturbopt/rng.h"
#include "test_support.h"

namespace perturbopt {
namespace {

using testing::RandomSpd;
using testing::RandomVector;
using testing::ToEigen;

std::shared_ptr<const QuadraticObjective> RandomQuadratic(std::size_t n,
                                                          std::uint64_t seed) {
  Rng rng(seed);
  Vector m = RandomVector(n, rng);
  return std::make_shared<QuadraticObjective>(std::move(m), RandomSpd(n, rng));
}

// Separable quartic terms, so the third derivative is nonzero.
SeparableSpec Quartic(std::size_t n, double c) {
  SeparableSpec t(n);
  for (auto& term : t) {
    term = {[c](double x) { return c * x * x * x * x / 4.0; },
            [c](double x) { return c * x * x * x; },
            [c](double x) { return 3.0 * c * x * x; },
            [c](double x) { return 6.0 * c * x; }};
  }
  return t;
}

TEST(QuadraticObjectiveTest, ValueAndGradient) {
  const auto q = RandomQuadratic(4, 1);
  EXPECT_NEAR(q->Value(q->minimizer()), 0.0, 1e-15);
  for (double g : q->Gradient(q->minimizer())) EXPECT_NEAR(g, 0.0, 1e-14);
  const Vector x = {1, 0, -1, 2};
  const Eigen::VectorXd d = ToEigen(x) - ToEigen(q->minimizer());
  EXPECT_NEAR(q->Value(x), 0.5 * d.dot(ToEigen(q->curvature()) * d), 1e-12);
  EXPECT_EQ(q->ThirdDirectional(x, x, x, x), 0.0);
}

TEST(LinearPerturbationTest, ShiftsGradientOnly) {
  const auto q = RandomQuadratic(3, 2);
  const Vector a = {0.5, -1, 2};
  const LinearPerturbation g(q, a);
  const Vector x = {0.1, 0.2, 0.3};
  const Vector gq = q->Gradient(x);
  const Vector gg = g.Gradient(x);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(gg[i], gq[i] + a[i], 1e-14);
    EXPECT_NEAR(g.Partial(x, i), gg[i], 1e-14);
  }
  EXPECT_NEAR(g.Value(x), q->Value(x) + Dot(a, x), 1e-14);
  EXPECT_EQ(g.Hessian(x).matrix(), q->Hessian(x).matrix());
  EXPECT_THROW(LinearPerturb(q, Vector{1.0}), Error);
}

TEST(SeparablePerturbationTest, DerivativesAgreeWithFiniteDifferences) {
  const auto q = RandomQuadratic(5, 3);
  const SeparablePerturbation g(q, Quartic(5, 0.7));
  const Vector x = {0.3, -0.5, 1.1, 0.2, -0.9};
  const FiniteDiffReport r = FiniteDiffCheck(g, x, 5);
  EXPECT_LT(r.grad_err, 1e-6);
  EXPECT_LT(r.hess_err, 1e-6);
  EXPECT_LT(r.third_err, 1e-5);
  // <nabla^3, e_j e_j e_j> = t_j'''(x_j).
  Vector e(5, 0.0);
  e[2] = 1.0;
  EXPECT_NEAR(g.ThirdDirectional(x, e, e, e), 6.0 * 0.7 * 1.1, 1e-12);
  EXPECT_NEAR(g.Partial2(x, 2), g.Hessian(x)(2, 2), 1e-12);
}

TEST(ScalarFunctionTest, RidgeAndZero) {
  const ScalarFunction r = ScalarFunction::Ridge(2.0, 1.0);
  EXPECT_DOUBLE_EQ(r.value(3.0), 4.0);
  EXPECT_DOUBLE_EQ(r.d1(3.0), 4.0);
  EXPECT_DOUBLE_EQ(r.d2(3.0), 2.0);
  EXPECT_DOUBLE_EQ(r.d3(3.0), 0.0);
  const ScalarFunction z = ScalarFunction::Zero();
  EXPECT_DOUBLE_EQ(z.value(3.0) + z.d1(3.0) + z.d2(3.0) + z.d3(3.0), 0.0);
}

TEST(BlockRestrictionTest, MatchesBaseOnFreeCoordinates) {
  const auto q = RandomQuadratic(5, 4);
  const SeparablePerturbation g(q, Quartic(5, 0.3));
  const Vector point = {1, 2, 3, 4, 5};
  const BlockRestriction r(g, {1, 3}, point);
  const Vector free = {-1, 0.5};
  const Vector full = r.Embed(free);
  EXPECT_EQ(full, (Vector{1, -1, 3, 0.5, 5}));
  EXPECT_DOUBLE_EQ(r.Value(free), g.Value(full));
  const Vector gr = r.Gradient(free);
  const Vector gf = g.Gradient(full);
  EXPECT_DOUBLE_EQ(gr[0], gf[1]);
  EXPECT_DOUBLE_EQ(gr[1], gf[3]);
  EXPECT_DOUBLE_EQ(r.Hessian(free)(0, 1), g.Hessian(full)(1, 3));
  const FiniteDiffReport fd = FiniteDiffCheck(r, free);
  EXPECT_LT(fd.grad_err, 1e-6);
}

TEST(NewtonTest, QuadraticInOneStep) {
  const auto q = RandomQuadratic(6, 5);
  const SolveReport r = NewtonMinimize(*q, Vector(6, 0.0));
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 2);
  for (std::size_t i = 0; i < 6; ++i)
    EXPECT_NEAR(r.argmin[i], q->minimizer()[i], 1e-10);
}

TEST(NewtonTest, NonQuadraticConvergesAndRecordsTrajectory) {
  const auto q = RandomQuadratic(4, 6);
  const SeparablePerturbation g(q, Quartic(4, 1.0));
  NewtonOptions opts;
  opts.record_trajectory = true;
  const SolveReport r = NewtonMinimize(g, Vector(4, 3.0), opts);
  ASSERT_TRUE(SolveSucceeded(r, opts.tol));
  EXPECT_LE(NormInf(g.Gradient(r.argmin)), 1e-9);
  EXPECT_EQ(r.trajectory.size(), r.values.size());
  for (std::size_t k = 1; k < r.values.size(); ++k)
    EXPECT_LE(r.values[k], r.values[k - 1] + 1e-12);
}

TEST(CoordinateDescentTest, AgreesWithNewton) {
  const auto q = RandomQuadratic(5, 7);
  const SeparablePerturbation g(q, Quartic(5, 0.5));
  const SolveReport a = NewtonMinimize(g, Vector(5, 0.0));
  const SolveReport b = CoordinateDescentMinimize(g, Vector(5, 0.0));
  ASSERT_TRUE(SolveSucceeded(a, tol::kSolverGradient));
  ASSERT_TRUE(SolveSucceeded(b, tol::kSolverGradient));
  for (std::size_t i = 0; i < 5; ++i)
    EXPECT_NEAR(a.argmin[i], b.argmin[i], 1e-8);
}

TEST(CoordinateDescentTest, ValuesAreMonotone) {
  const auto q = RandomQuadratic(4, 8);
  CoordinateOptions opts;
  opts.record_trajectory = true;
  const SolveReport r = CoordinateDescentMinimize(*q, Vector(4, 2.0), opts);
  ASSERT_TRUE(r.converged);
  for (std::size_t k = 1; k < r.values.size(); ++k)
    EXPECT_LE(r.values[k], r.values[k - 1] + 1e-12);
}

TEST(PartialMinimizeTest, MatchesSchurFormula) {
  const auto q = RandomQuadratic(5, 9);
  const BlockSplit split = BlockSplit::Halves(5);
  const Vector nu = {0.4, -0.2, 0.9};
  const SolveReport r =
      PartialMinimize(*q, split, FixedBlock::kNuisance, nu, Vector(2, 0.0));
  ASSERT_TRUE(r.converged);
  // theta_nu = theta* - F_tt^{-1} F_tn (nu - nu*).
  const Eigen::MatrixXd f = ToEigen(q->curvature());
  const Eigen::VectorXd dn =
      ToEigen(nu) - ToEigen(split.Nuisance(q->minimizer()));
  const Eigen::VectorXd expect =
      ToEigen(split.Target(q->minimizer())) -
      f.topLeftCorner(2, 2).ldlt().solve(f.topRightCorner(2, 3) * dn);
  EXPECT_LT((ToEigen(r.argmin) - expect).norm(), 1e-9);
}

TEST(PartialMinimizeTest, FixedTargetSolvesNuisance) {
  const auto q = RandomQuadratic(4, 10);
  const BlockSplit split({0, 3}, {1, 2});
  const Vector theta = {1.0, -1.0};
  const SolveReport r =
      PartialMinimize(*q, split, FixedBlock::kTarget, theta, Vector(2, 0.0));
  ASSERT_TRUE(r.converged);
  const Vector g = q->Gradient(split.Join(theta, r.argmin));
  EXPECT_NEAR(g[1], 0.0, 1e-9);
  EXPECT_NEAR(g[2], 0.0, 1e-9);
}

}  // namespace
}  // namespace perturbopt
