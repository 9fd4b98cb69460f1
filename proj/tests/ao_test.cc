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

#include "perturbopt/ao.h"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <string>

#include "perturbopt/error.h"
#include "perturbopt/linalg.h"
#include "perturbopt/objective.h"
#include "perturbopt/rng.h"
#include "test_support.h"

namespace perturbopt {
namespace {

using testing::RandomSpd;
using testing::RandomVector;
using testing::ToEigen;

struct QuadCase {
  QuadraticObjective q;
  BlockSplit split;
};

QuadCase MakeQuadCase(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Vector m = RandomVector(n, rng);
  return {QuadraticObjective(std::move(m), RandomSpd(n, rng, 0.2)),
          BlockSplit::Halves(n)};
}

double EigenPptNorm(const SymMatrix& f, const BlockSplit& split) {
  const Eigen::MatrixXd fe = ToEigen(f);
  const auto p = split.p();
  const auto q = split.q();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> et(fe.topLeftCorner(p, p));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> en(fe.bottomRightCorner(q, q));
  const Eigen::MatrixXd pm = et.operatorInverseSqrt() *
                             fe.topRightCorner(p, q) * en.operatorInverseSqrt();
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(pm * pm.transpose())
      .eigenvalues()
      .maxCoeff();
}

TEST(AoRunTest, TraceShapes) {
  const QuadCase c = MakeQuadCase(5, 1);
  AoOptions opts;
  opts.steps = 4;
  opts.record_residual_vectors = true;
  const AoTrace tr = AoRun(c.q, c.split, Vector(2, 0.0), opts);
  EXPECT_EQ(tr.steps(), 4u);
  EXPECT_EQ(tr.theta.size(), 5u);
  EXPECT_EQ(tr.nui.size(), 5u);
  EXPECT_TRUE(tr.nui[0].empty());
  EXPECT_EQ(tr.theta_err.size(), 5u);
  EXPECT_EQ(tr.eps.size(), tr.alpha.size());
  EXPECT_NEAR(tr.ppt_norm, EigenPptNorm(c.q.curvature(), c.split), 1e-9);
}

TEST(AoRunTest, QuadraticFollowsLinearRecursion) {
  for (std::uint64_t seed = 2; seed < 8; ++seed) {
    const QuadCase c = MakeQuadCase(3 + seed % 5, seed);
    Rng rng(seed);
    EXPECT_LE(
        QuadAoIdentityCheck(c.q, c.split, RandomVector(c.split.p(), rng), 8),
        1e-8);
  }
}

TEST(AoRunTest, QuadraticResidualsVanishAndValuesDecrease) {
  const QuadCase c = MakeQuadCase(6, 9);
  AoOptions opts;
  opts.steps = 6;
  const AoTrace tr = AoRun(c.q, c.split, Vector(3, 1.0), opts);
  for (std::size_t t = 1; t <= tr.steps(); ++t) {
    EXPECT_LE(tr.eps_norm[t], 1e-9);
    EXPECT_LE(tr.alpha_norm[t], 1e-9);
    EXPECT_LE(tr.half_value[t], tr.value[t - 1] + 1e-12);
    EXPECT_LE(tr.value[t], tr.half_value[t] + 1e-12);
    EXPECT_LE(tr.theta_err[t], tr.ppt_norm * tr.theta_err[t - 1] + 1e-10);
  }
}

TEST(EstimateRateTest, SlowestModeGivesPptNorm) {
  const QuadCase c = MakeQuadCase(6, 10);
  const BlockHessian bh = BlockHessian::From(c.q.curvature(), c.split);
  const Contraction con = ContractionMatrix(bh);
  const EigenDecomposition ed =
      SymEig(SymMatrix(MatMul(con.p, con.p.Transpose())));
  // theta0 - theta* = F_tt^{-1/2} v with v the top eigenvector.
  const Vector v = ed.vectors.Column(ed.values.size() - 1);
  const Vector dir = MatVec(PsdPower(bh.f_tt, PsdExponent::kInvSqrt), v);
  AoOptions opts;
  opts.steps = 8;
  const AoTrace tr = AoRun(
      c.q, c.split, Axpy(c.split.Target(c.q.minimizer()), 1e-2, dir), opts);
  EXPECT_NEAR(EstimateRate(tr), con.ppt_norm, 1e-7);
}

TEST(EstimateRateTest, NeedsEnoughSteps) {
  const QuadCase c = MakeQuadCase(4, 11);
  AoOptions opts;
  opts.steps = 3;
  const AoTrace tr = AoRun(c.q, c.split, Vector(2, 1.0), opts);
  try {
    EstimateRate(tr);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientSteps);
  }
}

TEST(EstimateRateTest, StartAtOptimumGivesZero) {
  const QuadCase c = MakeQuadCase(4, 12);
  AoOptions opts;
  opts.steps = 5;
  const AoTrace tr = AoRun(c.q, c.split, c.split.Target(c.q.minimizer()), opts);
  EXPECT_EQ(EstimateRate(tr), 0.0);
}

TEST(MetricTest, DominatedDiagonalMetricIsDominated) {
  Rng rng(13);
  for (int i = 0; i < 10; ++i) {
    const SymMatrix f = RandomSpd(6, rng, 0.1);
    const MetricTensor d = DominatedDiagonalMetric(f);
    const Eigen::MatrixXd gap = ToEigen(f) - ToEigen(d.Squared());
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gap)
                  .eigenvalues()
                  .minCoeff(),
              -1e-10);
    EXPECT_NO_THROW(RequireMetricDominance(f, d, 1.0, "test"));
  }
}

TEST(MetricTest, DominanceViolationThrows) {
  const SymMatrix f = SymMatrix::Identity(3);
  const MetricTensor d = MetricTensor::Diagonal({1.0, 2.0, 1.0});
  try {
    RequireMetricDominance(f, d, 1.0, "target");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMetricDominanceViolated);
  }
  // Allowed once D^2 <= kappa^2 F.
  EXPECT_NO_THROW(RequireMetricDominance(f, d, 2.0, "target"));
}

TEST(CertificateTest, QuadraticCertifiesAnyGap) {
  const QuadCase c = MakeQuadCase(6, 14);
  const BlockHessian bh = BlockHessian::From(c.q.curvature(), c.split);
  ConditionConstants zero;
  zero.radii = Radii::Uniform(1.0);
  const MetricTensor d = DominatedDiagonalMetric(bh.f_tt);
  const MetricTensor h = DominatedDiagonalMetric(bh.f_nn);
  const AoCertificate cert = CertifyConvergence(bh, zero, 0.1, d, h);
  EXPECT_EQ(cert.delta_nano, 0.0);
  EXPECT_NEAR(cert.ppt_norm, EigenPptNorm(c.q.curvature(), c.split), 1e-9);
  EXPECT_TRUE(cert.holds());
}

TEST(CertificateTest, MaxCertifiedGapIsTheBoundary) {
  const QuadCase c = MakeQuadCase(6, 15);
  const BlockHessian bh = BlockHessian::From(c.q.curvature(), c.split);
  ConditionConstants k;
  k.tau3 = 0.2;
  k.d12 = 0.05;
  k.d21 = 0.05;
  k.radii = Radii::Uniform(0.5);
  // With D^2 = F_tt and H^2 = F_nn, rho* = |P| < 1.
  const MetricTensor d =
      MetricTensor::Full(PsdPower(bh.f_tt, PsdExponent::kSqrt));
  const MetricTensor h =
      MetricTensor::Full(PsdPower(bh.f_nn, PsdExponent::kSqrt));
  const AoCertificate c0 = CertifyConvergence(bh, k, 0.0, d, h);
  const double gmax = MaxCertifiedGap(c0);
  EXPECT_NEAR(c0.rho_star, std::sqrt(c0.ppt_norm), 1e-9);
  ASSERT_GT(gmax, 0.0);
  ASSERT_TRUE(std::isfinite(gmax));
  EXPECT_TRUE(CertifyConvergence(bh, k, 0.99 * gmax, d, h).holds());
  EXPECT_FALSE(CertifyConvergence(bh, k, 1.01 * gmax, d, h).holds());
}

TEST(CertificateTest, KappaInflatesConstants) {
  const QuadCase c = MakeQuadCase(4, 16);
  const BlockHessian bh = BlockHessian::From(c.q.curvature(), c.split);
  ConditionConstants k;
  k.tau3 = 0.1;
  k.d12 = 0.1;
  k.d21 = 0.1;
  k.radii = Radii::Uniform(0.2);
  const MetricTensor d = DominatedDiagonalMetric(bh.f_tt);
  const MetricTensor h = DominatedDiagonalMetric(bh.f_nn);
  const AoCertificate plain = CertifyConvergence(bh, k, 0.01, d, h);
  k.kappa = 2.0;
  const AoCertificate scaled = CertifyConvergence(bh, k, 0.01, d, h);
  EXPECT_NEAR(scaled.tau3, 0.8, 1e-15);
  EXPECT_NEAR(scaled.d12, 0.2, 1e-15);
  EXPECT_NEAR(scaled.d21, 0.4, 1e-15);
  EXPECT_NEAR(scaled.rho_star, plain.rho_star / 2.0, 1e-12);
}

TEST(TraceCsvTest, HeaderAndRows) {
  const QuadCase c = MakeQuadCase(4, 19);
  AoOptions opts;
  opts.steps = 3;
  std::ostringstream out;
  WriteTraceCsv(out, AoRun(c.q, c.split, Vector(2, 0.5), opts));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,theta_err,nui_err,eps_norm,alpha_norm");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

}  // namespace
}  // namespace perturbopt
