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

#include "perturbopt/expansions.h"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "perturbopt/btl.h"
#include "perturbopt/error.h"
#include "perturbopt/linalg.h"
#include "perturbopt/objective.h"
#include "perturbopt/rng.h"
#include "test_support.h"

namespace perturbopt {
namespace {

using testing::RandomMatrix;
using testing::RandomSpd;
using testing::RandomVector;
using testing::ToEigen;

// max over s in {-1, 1}^q of |D^{-1} F_tn H^{-1} s|_2, by enumeration.
double BruteRhoStarInf(const Matrix& ftn, const Vector& d, const Vector& h) {
  const std::size_t q = ftn.cols();
  const Eigen::MatrixXd b = ToEigen(d).cwiseInverse().asDiagonal() *
                            ToEigen(ftn) *
                            ToEigen(h).cwiseInverse().asDiagonal();
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << q); ++mask) {
    Eigen::VectorXd s(q);
    for (std::size_t j = 0; j < q; ++j) s(j) = (mask >> j) & 1 ? 1.0 : -1.0;
    best = std::max(best, (b * s).norm());
  }
  return best;
}

Vector RandomPositive(std::size_t n, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.Uniform(0.5, 2.0);
  return v;
}

TEST(RhoDualTest, KnownMatrix) {
  const SymMatrix f(Matrix::FromRows({{4, -1, 1}, {-1, 1, 0}, {1, 0, 1}}));
  const RhoDualResult r = RhoDual(f, MetricTensor::SqrtDiagonalOf(f));
  // Row 0: (1/1 + 1/1) / 2 = 1; row 1: 1 / 2; row 2: 1 / 2.
  EXPECT_DOUBLE_EQ(r.exact, 1.0);
  EXPECT_NEAR(r.l2, std::sqrt(2.0) / 2.0, 1e-15);
}

TEST(RhoDualTest, L2NeverExceedsExact) {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const SymMatrix f = RandomSpd(7, rng, 0.3);
    const RhoDualResult r = RhoDual(f, MetricTensor::SqrtDiagonalOf(f));
    EXPECT_LE(r.l2, r.exact + 1e-15);
  }
}

TEST(RhoStarTest, SupNormMatchesEnumeration) {
  Rng rng(2);
  for (int i = 0; i < 30; ++i) {
    const std::size_t p = 1 + i % 4;
    const std::size_t q = 1 + i % 10;
    const Matrix ftn = RandomMatrix(p, q, rng);
    const Vector d = RandomPositive(p, rng);
    const Vector h = RandomPositive(q, rng);
    const RhoStarResult r = RhoStar(ftn, MetricTensor::Diagonal(d),
                                    MetricTensor::Diagonal(h), NormTag::kLInf);
    EXPECT_NEAR(r.value, BruteRhoStarInf(ftn, d, h), 1e-12);
    EXPECT_EQ(r.method, EstimateMethod::kExact);
  }
}

TEST(RhoStarTest, L2IsSpectralNorm) {
  Rng rng(3);
  const Matrix ftn = RandomMatrix(3, 5, rng);
  const Vector d = RandomPositive(3, rng);
  const Vector h = RandomPositive(5, rng);
  const RhoStarResult r = RhoStar(ftn, MetricTensor::Diagonal(d),
                                  MetricTensor::Diagonal(h), NormTag::kL2);
  const Eigen::MatrixXd m = ToEigen(d).cwiseInverse().asDiagonal() *
                            ToEigen(ftn) *
                            ToEigen(h).cwiseInverse().asDiagonal();
  EXPECT_NEAR(r.value, Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0),
              1e-8);
}

TEST(DerivedConstantsTest, SupNormFormulas) {
  ConditionConstants c;
  c.tau3 = 0.3;
  c.d12 = 0.2;
  c.d21 = 0.4;
  c.norm = NormTag::kLInf;
  const double rho = 0.5;
  const double a = 0.1;
  const ExpansionDiagnostics d = DerivedConstants(rho, c, Flavor::kSupNorm, a);
  const double r = std::sqrt(2.0) * a / (1.0 - rho);
  const double b = c.d21 * r;
  const double nano =
      (rho * c.d21 + c.d12 / 2 +
       3 * std::pow(rho + b / 2, 2) * c.tau3 / (4 * std::pow(1 - b, 2))) /
      (1 - b);
  EXPECT_NEAR(d.r_infty, r, 1e-15);
  EXPECT_NEAR(d.dltwb, b, 1e-15);
  EXPECT_NEAR(d.delta_nano, nano, 1e-14);
  EXPECT_NEAR(
      d.delta_infty,
      2 * c.tau3 + c.d21 / 2 + 2 * (nano + c.d21) / std::pow(1 - rho, 2),
      1e-13);
}

TEST(DerivedConstantsTest, MarginalAndKappa) {
  ConditionConstants c;
  c.tau3 = 0.5;
  c.d12 = 0.1;
  c.d21 = 0.2;
  c.radii = {0.3, 0.4};
  const double rho = 0.6;
  const ExpansionDiagnostics d = DerivedConstants(rho, c, Flavor::kMarginal);
  const double b = c.d21 * 0.4;
  const double rho2 = 1.5 / (1 - b) * (rho + c.d12 * 0.4 / 2);
  EXPECT_NEAR(d.dltwb, b, 1e-15);
  EXPECT_NEAR(d.rho2, rho2, 1e-14);
  EXPECT_NEAR(d.delta_nano,
              (rho * c.d21 + c.d12 / 2 + rho2 * rho2 * c.tau3 / 3) / (1 - b),
              1e-14);
  EXPECT_EQ(d.prerequisites_hold, rho2 * c.tau3 * 0.4 <= 2.0 / 3.0);

  c.kappa = 2.0;
  const ExpansionDiagnostics k = DerivedConstants(rho, c, Flavor::kMarginal);
  EXPECT_NEAR(k.rho_star, rho / 2.0, 1e-15);
  EXPECT_NEAR(k.delta_nano, 2.0 * d.delta_nano, 1e-14);
}

TEST(DerivedConstantsTest, Rejections) {
  ConditionConstants c;
  c.norm = NormTag::kLInf;
  try {
    DerivedConstants(1.0, c, Flavor::kSupNorm, 0.1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRhoNotLessThanOne);
  }
  c.d21 = 100.0;
  try {
    DerivedConstants(0.5, c, Flavor::kSupNorm, 1.0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDltwbTooLarge);
  }
}

TEST(MakeReportTest, SlackAndAssertion) {
  PrerequisiteFlags all{true, true, true};
  EXPECT_TRUE(MakeReport("x", 1.0, 1.0 + 5e-11, 1.0, all).holds);
  EXPECT_FALSE(MakeReport("x", 1.0, 1.0 + 1e-9, 1.0, all).holds);
  EXPECT_TRUE(MakeReport("x", 1.0, 0.5, 1.0, all).asserted);
  EXPECT_FALSE(MakeReport("x", 1.0, 0.5, 1.0, {true, false, true}).asserted);
}

TEST(LinearSupExpansionTest, QuadraticIsExactAtSecondOrder) {
  Rng rng(4);
  const QuadraticObjective q(RandomVector(5, rng), RandomSpd(5, rng, 2.0));
  ConditionConstants c;
  c.norm = NormTag::kLInf;
  c.radii = Radii::Uniform(10.0);
  const Vector a = Scale(RandomVector(5, rng), 0.1);
  const SupExpansionResult r = CheckLinearSupExpansion(
      q, a, c, MetricTensor::SqrtDiagonalOf(q.curvature()));
  ASSERT_LT(r.diagnostics.rho_dual, 1.0);
  EXPECT_LE(r.Report("ii").remainder, 1e-12);
  EXPECT_LE(r.Report("iii").remainder, 1e-12);
  for (const ResidualReport& rep : r.reports) {
    EXPECT_TRUE(rep.holds) << rep.variant;
    EXPECT_TRUE(rep.asserted) << rep.variant;
  }
  EXPECT_THROW(r.Report("v"), Error);
}

TEST(LinearSupExpansionTest, BtlBoundsHoldWhenAsserted) {
  // Ridge-penalized complete graph: rho_dual well below one.
  Rng rng(5);
  const std::size_t n = 10;
  const ComparisonGraph g = SampleErGraph(n, 1.0, 2, rng);
  const ScoreVector truth = SampleScores(n, 0.0, 1.0, rng);
  const PenaltySpec pen = PenaltySpec::Ridge(2.0);
  int asserted = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const BtlObservation obs = SampleOutcomes(g, truth, rng);
    const Vector a = Scale(NoiseGradient(obs, truth), 0.05);
    const auto f = MakeBtlObjective(obs, pen, BtlMode::kExpected, truth);
    const Vector star = SolveJointMinimizer(*f);
    const MetricTensor d = MetricTensor::SqrtDiagonalOf(f->Hessian(star));
    ConditionConstants zero;
    zero.norm = NormTag::kLInf;
    const double r_inf =
        CheckLinearSupExpansion(*f, a, zero, d, star).diagnostics.r_infty;
    ASSERT_TRUE(std::isfinite(r_inf));
    const ConditionConstants c =
        BtlConditionConstants(g, pen, ScoreVector(star), Radii::Uniform(r_inf),
                              d, NormTag::kLInf)
            .upper;
    const SupExpansionResult r = CheckLinearSupExpansion(*f, a, c, d, star);
    for (const ResidualReport& x : r.reports) {
      if (x.asserted) {
        ++asserted;
        EXPECT_TRUE(x.holds) << x.variant << " rep " << rep;
      }
    }
  }
  EXPECT_GT(asserted, 0);
}

TEST(SeparableSupExpansionTest, RidgeMatchesLinearShift) {
  // t_j = lambda x^2 / 2 at a minimizer near zero behaves like a shift.
  Rng rng(6);
  const QuadraticObjective q(Vector(4, 0.0), RandomSpd(4, rng, 2.0));
  SeparableSpec t(4, ScalarFunction::Ridge(1e-3, 0.5));
  ConditionConstants c;
  c.norm = NormTag::kLInf;
  c.radii = Radii::Uniform(10.0);
  const SupExpansionResult r = CheckSeparableSupExpansion(q, t, c);
  // M = t'(0) = -lambda / 2.
  for (double m : r.shift) EXPECT_NEAR(m, -5e-4, 1e-15);
  EXPECT_TRUE(r.Report("iii").holds);
  EXPECT_NO_THROW(r.Report("iii_printed"));
}

TEST(PartialBiasTest, QuadraticBiasIsLinear) {
  Rng rng(7);
  const QuadraticObjective q(RandomVector(5, rng), RandomSpd(5, rng, 1.0));
  const BlockSplit split = BlockSplit::Halves(5);
  const BlockHessian bh = BlockHessian::From(q.curvature(), split);
  const PartialMetric m{MetricTensor::SqrtDiagonalOf(bh.f_tt),
                        MetricTensor::Identity(3), NormTag::kL2};
  ConditionConstants c;
  c.radii = Radii::Uniform(5.0);
  const Vector nu = Axpy(split.Nuisance(q.minimizer()), 0.3, Vector{1, -1, 2});
  // The square-root diagonal need not be dominated; use the dominated one.
  const PartialMetric dm{DominatedDiagonalMetric(bh.f_tt), m.h, m.nui_norm};
  const auto res = CheckPartialBias(q, split, {nu}, dm, c);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_LE(res[0].bias.remainder, 1e-10);
  EXPECT_LE(res[0].value_defect.remainder, 1e-10);
  EXPECT_TRUE(res[0].bias.holds);
  EXPECT_TRUE(res[0].value_defect.holds);
}

TEST(PerturbedPartialTest, QuadraticIsExact) {
  Rng rng(8);
  const QuadraticObjective q(RandomVector(4, rng), RandomSpd(4, rng, 1.0));
  const BlockSplit split = BlockSplit::Halves(4);
  const BlockHessian bh = BlockHessian::From(q.curvature(), split);
  const PartialMetric m{DominatedDiagonalMetric(bh.f_tt),
                        MetricTensor::Identity(2), NormTag::kL2};
  ConditionConstants c;
  c.radii = Radii::Uniform(5.0);
  const Vector nu = Axpy(split.Nuisance(q.minimizer()), 0.2, Vector{1, 1});
  const auto res =
      CheckPerturbedPartial(q, split, Vector{0.1, -0.3}, {nu}, m, c);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_LE(res[0].expansion.remainder, 1e-10);
  EXPECT_TRUE(res[0].expansion.holds);
  EXPECT_TRUE(res[0].localization.holds);
}

TEST(PartialBiasTest, RejectsUndominatedMetric) {
  const QuadraticObjective q(Vector(2, 0.0), SymMatrix::Identity(2));
  const BlockSplit split({0}, {1});
  const PartialMetric m{MetricTensor::Diagonal({2.0}),
                        MetricTensor::Identity(1), NormTag::kL2};
  EXPECT_THROW(CheckPartialBias(q, split, {{0.1}}, m, ConditionConstants{}),
               Error);
}

TEST(SemiOrthogonalityTest, BlockDiagonalHasNoBias) {
  SymMatrix f = SymMatrix::Identity(4);
  f.Set(0, 1, 0.3);
  f.Set(2, 3, -0.2);
  const QuadraticObjective q(Vector{1, 2, 3, 4}, f);
  const BlockSplit split({0, 1}, {2, 3});
  const SemiOrthogonalityReport r = SemiOrthogonalityProbe(
      q, split, {{3.5, 4.5}, {2.0, 3.0}}, MetricTensor::Diagonal({0.5, 0.5}));
  EXPECT_TRUE(r.near_orthogonal);
  EXPECT_TRUE(r.unbiased);
  EXPECT_TRUE(r.consistent());

  f.Set(0, 2, 0.4);
  const QuadraticObjective coupled(Vector{1, 2, 3, 4}, f);
  const SemiOrthogonalityReport s = SemiOrthogonalityProbe(
      coupled, split, {{3.5, 4.5}}, MetricTensor::Diagonal({0.5, 0.5}));
  EXPECT_FALSE(s.near_orthogonal);
  EXPECT_FALSE(s.unbiased);
}

TEST(RemainderScalingTest, SlopesAreQuadratic) {
  for (std::uint64_t seed : {1u, 2u}) {
    const testing::ScalingSlopes s = testing::RemainderScalingSlopes(10, seed);
    EXPECT_GE(s.partial_bias, 1.9);
    EXPECT_GE(s.perturbed_partial, 1.9);
    EXPECT_GE(s.separable, 1.9);
  }
}

TEST(CsvTest, DiagnosticsAndResiduals) {
  ExpansionDiagnostics d;
  d.rho_dual = 0.5;
  std::ostringstream out;
  WriteDiagnosticsCsv(out, d);
  EXPECT_NE(out.str().find("quantity,value"), std::string::npos);
  EXPECT_NE(out.str().find("rho_dual,0.5"), std::string::npos);
  EXPECT_NE(out.str().find("prerequisites_hold"), std::string::npos);
  std::ostringstream res;
  WriteResidualCsv(res, {MakeReport("ii", 1.0, 0.1, 0.2, {true, true, true})});
  EXPECT_NE(res.str().find("ii,"), std::string::npos);
}

}  // namespace
}  // namespace perturbopt
