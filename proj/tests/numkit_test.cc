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

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <set>
#include <string>

#include "perturbopt/csv.h"
#include "perturbopt/error.h"
#include "perturbopt/finite_diff.h"
#include "perturbopt/linalg.h"
#include "perturbopt/matrix.h"
#include "perturbopt/objective.h"
#include "perturbopt/rng.h"
#include "test_support.h"

namespace perturbopt {
namespace {

using testing::RandomMatrix;
using testing::RandomSpd;
using testing::RandomUnitDiagonal;
using testing::RandomVector;
using testing::ToEigen;

TEST(MatrixTest, ProductsMatchEigen) {
  Rng rng(1);
  const Matrix a = RandomMatrix(4, 3, rng);
  const Matrix b = RandomMatrix(3, 5, rng);
  const Matrix c = RandomMatrix(4, 5, rng);
  const Vector x = RandomVector(3, rng);
  const Vector y = RandomVector(4, rng);
  EXPECT_LT((ToEigen(MatMul(a, b)) - ToEigen(a) * ToEigen(b)).norm(), 1e-12);
  EXPECT_LT(
      (ToEigen(MatTMul(a, c)) - ToEigen(a).transpose() * ToEigen(c)).norm(),
      1e-12);
  EXPECT_LT((ToEigen(MatVec(a, x)) - ToEigen(a) * ToEigen(x)).norm(), 1e-12);
  EXPECT_LT(
      (ToEigen(MatTVec(a, y)) - ToEigen(a).transpose() * ToEigen(y)).norm(),
      1e-12);
  EXPECT_EQ(a.Transpose().Transpose(), a);
}

TEST(MatrixTest, NormsAndVectorOps) {
  const Matrix m = Matrix::FromRows({{1, -2}, {-3, 0.5}});
  EXPECT_DOUBLE_EQ(m.NormInf(), 3.5);
  EXPECT_DOUBLE_EQ(m.MaxAbs(), 3.0);
  const Vector a = {3, -4};
  EXPECT_DOUBLE_EQ(Norm2(a), 5.0);
  EXPECT_DOUBLE_EQ(NormInf(a), 4.0);
  EXPECT_EQ(Axpy(a, 2.0, Vector{1, 1}), (Vector{5, -2}));
  EXPECT_EQ(Hadamard(a, a), (Vector{9, 16}));
}

TEST(MatrixTest, SymMatrixRejectsAsymmetry) {
  EXPECT_THROW(SymMatrix(Matrix::FromRows({{1, 2}, {0, 1}})), Error);
}

TEST(BlockSplitTest, HalvesJoinRoundTrip) {
  const BlockSplit split = BlockSplit::Halves(5);
  EXPECT_EQ(split.p(), 2u);
  EXPECT_EQ(split.q(), 3u);
  const Vector x = {1, 2, 3, 4, 5};
  EXPECT_EQ(split.Join(split.Target(x), split.Nuisance(x)), x);
}

TEST(BlockSplitTest, RejectsOverlap) {
  EXPECT_THROW(BlockSplit({0, 1}, {1, 2}), Error);
}

TEST(MetricTensorTest, ApplyInverseRoundTrip) {
  Rng rng(2);
  const MetricTensor full = MetricTensor::Full(RandomSpd(4, rng));
  const MetricTensor diag = MetricTensor::Diagonal({1, 2, 3, 4});
  const Vector x = RandomVector(4, rng);
  for (const MetricTensor* m : {&full, &diag}) {
    const Vector back = m->ApplyInverse(m->Apply(x));
    for (std::size_t i = 0; i < x.size(); ++i)
      EXPECT_NEAR(back[i], x[i], 1e-12);
  }
}

TEST(CholeskyTest, SolveAndInverseMatchEigen) {
  Rng rng(3);
  for (std::size_t n : {1u, 3u, 8u}) {
    const SymMatrix a = RandomSpd(n, rng);
    const Vector b = RandomVector(n, rng);
    const Eigen::VectorXd ref = ToEigen(a).llt().solve(ToEigen(b));
    EXPECT_LT((ToEigen(SpdSolve(a, b)) - ref).norm(), 1e-10 * ref.norm());
    const Eigen::MatrixXd inv = ToEigen(Cholesky::Factor(a).Inverse());
    EXPECT_LT((inv - ToEigen(a).inverse()).norm(), 1e-10);
  }
}

TEST(CholeskyTest, ThrowsOnIndefinite) {
  const SymMatrix a(Matrix::FromRows({{1, 2}, {2, 1}}));
  try {
    Cholesky::Factor(a);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotPositiveDefinite);
  }
}

TEST(LuSolveTest, MatchesEigen) {
  Rng rng(4);
  const Matrix a = RandomMatrix(6, 6, rng);
  const Vector b = RandomVector(6, rng);
  const Eigen::VectorXd ref = ToEigen(a).partialPivLu().solve(ToEigen(b));
  EXPECT_LT((ToEigen(LuSolve(a, b)) - ref).norm(), 1e-9 * ref.norm());
}

TEST(SymEigTest, MatchesEigenSolver) {
  Rng rng(5);
  for (std::size_t n : {2u, 5u, 12u}) {
    const SymMatrix a = SymMatrix(Combine(1.0, RandomSpd(n, rng).matrix(), -1.0,
                                          RandomSpd(n, rng).matrix()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ToEigen(a));
    const EigenDecomposition ed = SymEig(a);
    for (std::size_t k = 0; k < n; ++k)
      EXPECT_NEAR(ed.values[k], es.eigenvalues()(k), 1e-10);
    // A V = V Lambda.
    const Eigen::MatrixXd v = ToEigen(ed.vectors);
    const Eigen::MatrixXd lam = ToEigen(ed.values).asDiagonal();
    EXPECT_LT((ToEigen(a) * v - v * lam).norm(), 1e-9);
    EXPECT_NEAR(MinEigenvalue(a), es.eigenvalues()(0), 1e-10);
    EXPECT_NEAR(MaxEigenvalue(a), es.eigenvalues()(n - 1), 1e-10);
  }
}

TEST(PsdPowerTest, SqrtAndInverseSqrt) {
  Rng rng(6);
  const SymMatrix a = RandomSpd(5, rng);
  const Eigen::MatrixXd s = ToEigen(PsdPower(a, PsdExponent::kSqrt));
  const Eigen::MatrixXd is = ToEigen(PsdPower(a, PsdExponent::kInvSqrt));
  const Eigen::MatrixXd inv = ToEigen(PsdPower(a, PsdExponent::kInverse));
  EXPECT_LT((s * s - ToEigen(a)).norm(), 1e-9);
  EXPECT_LT((s * is - Eigen::MatrixXd::Identity(5, 5)).norm(), 1e-9);
  EXPECT_LT((inv - ToEigen(a).inverse()).norm(), 1e-9);
}

TEST(SpectralNormTest, MatchesSingularValues) {
  Rng rng(7);
  for (auto [r, c] :
       {std::pair{3u, 7u}, std::pair{6u, 2u}, std::pair{5u, 5u}}) {
    const Matrix m = RandomMatrix(r, c, rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ToEigen(m));
    EXPECT_NEAR(SpectralNorm(m), svd.singularValues()(0), 1e-8);
  }
  EXPECT_EQ(SpectralNorm(Matrix(2, 3)), 0.0);
}

TEST(ContractionTest, MatchesEigenOracle) {
  Rng rng(8);
  const SymMatrix f = RandomSpd(7, rng, 0.3);
  const BlockSplit split = BlockSplit::Halves(7);
  const Contraction c = ContractionMatrix(BlockHessian::From(f, split));
  const Eigen::MatrixXd fe = ToEigen(f);
  const Eigen::MatrixXd ftt = fe.topLeftCorner(3, 3);
  const Eigen::MatrixXd fnn = fe.bottomRightCorner(4, 4);
  const Eigen::MatrixXd ftn = fe.topRightCorner(3, 4);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> et(ftt);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> en(fnn);
  const Eigen::MatrixXd p =
      et.operatorInverseSqrt() * ftn * en.operatorInverseSqrt();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(p * p.transpose());
  EXPECT_NEAR(c.ppt_norm, ep.eigenvalues().maxCoeff(), 1e-9);
  EXPECT_LT((ToEigen(c.p) - p).norm(), 1e-9);
  EXPECT_TRUE(c.certifiable);
}

TEST(NeumannTest, BoundsHoldOnRandomInputs) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 9;
    const Matrix b = RandomUnitDiagonal(n, 0.95, rng);
    const NeumannReport r = NeumannSupBounds(b, RandomVector(n, rng));
    EXPECT_TRUE(r.AllHold()) << "trial " << trial;
    EXPECT_LT(r.rho, 1.0);
  }
}

TEST(NeumannTest, RejectsLargeRowSums) {
  const Matrix b = Matrix::FromRows({{1, 0.6, 0.5}, {0, 1, 0}, {0, 0, 1}});
  try {
    NeumannSupBounds(b, Vector{1, 1, 1});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRhoNotLessThanOne);
  }
  EXPECT_THROW(
      NeumannSupBounds(Matrix::FromRows({{2, 0}, {0, 1}}), Vector{1, 1}),
      Error);
}

TEST(RngTest, DeterministicAndDistinctSubstreams) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.NextU64(), b.NextU64());
  std::set<std::uint64_t> seeds;
  for (std::uint64_t n : {10u, 20u, 40u}) {
    for (std::uint64_t rep = 0; rep < 50; ++rep)
      seeds.insert(SubstreamSeed(7, n, rep));
  }
  EXPECT_EQ(seeds.size(), 150u);
  EXPECT_EQ(SubstreamSeed(7, 10, 3), SubstreamSeed(7, 10, 3));
}

TEST(RngTest, UniformAndNormalMoments) {
  Rng rng(11);
  double su = 0.0;
  double sn = 0.0;
  double sn2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.Uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.Normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.01);
  EXPECT_NEAR(sn / n, 0.0, 0.03);
  EXPECT_NEAR(sn2 / n, 1.0, 0.05);
}

TEST(FiniteDiffTest, QuadraticIsExact) {
  Rng rng(12);
  const QuadraticObjective q(RandomVector(4, rng), RandomSpd(4, rng));
  const FiniteDiffReport r = FiniteDiffCheck(q, RandomVector(4, rng));
  EXPECT_LT(r.grad_err, 1e-6);
  EXPECT_LT(r.hess_err, 1e-6);
  EXPECT_LT(r.third_err, 1e-6);
}

TEST(FormatDoubleTest, RoundTripsExactly) {
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const double v = rng.Normal() * std::pow(10.0, rng.Uniform(-20, 20));
    EXPECT_EQ(std::strtod(FormatDouble(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(FormatDouble(std::nan("")), "nan");
}

TEST(ConstantsTest, ValidateRejectsBadInput) {
  ConditionConstants c;
  c.tau3 = -1.0;
  EXPECT_THROW(c.Validate(), Error);
  c.tau3 = 1.0;
  c.kappa = 0.5;
  EXPECT_THROW(c.Validate(), Error);
  c.kappa = 2.0;
  EXPECT_NO_THROW(c.Validate());
}

}  // namespace
}  // namespace perturbopt
