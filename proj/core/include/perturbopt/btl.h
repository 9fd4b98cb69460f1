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

// Bradley-Terry-Luce model: comparison graphs, outcome sampling and the
// penalized negative log-likelihood
//
//   L(u) = sum_{j<m} [N_jm phi(u_j - u_m) - S_jm (u_j - u_m)] + |G u|^2 / 2
//
// with phi(t) = log(1 + e^t).

#ifndef PERTURBOPT_BTL_H_
#define PERTURBOPT_BTL_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "perturbopt/constants.h"
#include "perturbopt/matrix.h"
#include "perturbopt/objective.h"
#include "perturbopt/rng.h"
#include "perturbopt/smooth_objective.h"

namespace perturbopt {

// Overflow-safe logistic helpers.
double Sigmoid(double t);
double LogOnePlusExp(double t);  // phi
double Phi2(double t);           // phi'' = sigma (1 - sigma)
double Phi3(double t);           // phi''' = phi'' (1 - 2 sigma)
// sup of |phi'''| over [center - half_width, center + half_width].
double SupAbsPhi3(double center, double half_width);

struct Edge {
  std::size_t j = 0;  // j < m, zero-based
  std::size_t m = 0;
  int count = 0;  // N_jm >= 1
};

class ComparisonGraph {
 public:
  ComparisonGraph(std::size_t n, std::vector<Edge> edges);

  std::size_t n() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool connected() const { return connected_; }
  // Indices into edges() of the edges touching item j.
  const std::vector<std::size_t>& incident(std::size_t j) const {
    return incident_[j];
  }
  std::size_t TotalComparisons() const;

 private:
  std::size_t n_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> incident_;
  bool connected_ = false;
};

// Wins S_jm of item j over item m, one per edge. Real-valued so that the
// expected observation N_jm sigma(u*_j - u*_m) is representable.
class BtlObservation {
 public:
  BtlObservation(ComparisonGraph graph, std::vector<double> wins);

  const ComparisonGraph& graph() const { return graph_; }
  const std::vector<double>& wins() const { return wins_; }

 private:
  ComparisonGraph graph_;
  std::vector<double> wins_;
};

struct PenaltySpec {
  enum class Kind { kNone, kMeanShift, kRidge };
  Kind kind = Kind::kMeanShift;
  double gsq = 1.0;

  static PenaltySpec None() { return {Kind::kNone, 0.0}; }
  // G^2 = g^2 e e^T with e = n^{-1/2} (1, ..., 1).
  static PenaltySpec MeanShift(double gsq) { return {Kind::kMeanShift, gsq}; }
  // G^2 = g^2 I.
  static PenaltySpec Ridge(double gsq) { return {Kind::kRidge, gsq}; }

  // Entry (j, m) of G^2 for n items.
  double Entry(std::size_t n, std::size_t j, std::size_t m) const;
};

class ScoreVector {
 public:
  explicit ScoreVector(Vector values);
  const Vector& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  Vector values_;
};

// Each pair included independently with probability p, with N_jm = L.
ComparisonGraph SampleErGraph(std::size_t n, double p, int comparisons,
                              Rng& rng);
// S_jm ~ Binomial(N_jm, sigma(u*_j - u*_m)).
BtlObservation SampleOutcomes(const ComparisonGraph& graph,
                              const ScoreVector& truth, Rng& rng);
// S_jm = N_jm sigma(u*_j - u*_m).
BtlObservation ExpectedOutcomes(const ComparisonGraph& graph,
                                const ScoreVector& truth);
// Scores iid uniform on [lo, hi].
ScoreVector SampleScores(std::size_t n, double lo, double hi, Rng& rng);

class BtlObjective final : public SmoothObjective {
 public:
  BtlObjective(BtlObservation obs, PenaltySpec penalty);

  const BtlObservation& observation() const { return obs_; }
  const PenaltySpec& penalty() const { return penalty_; }

  std::size_t dim() const override { return obs_.graph().n(); }
  double Value(std::span<const double> x) const override;
  Vector Gradient(std::span<const double> x) const override;
  SymMatrix Hessian(std::span<const double> x) const override;
  double ThirdDirectional(std::span<const double> x, std::span<const double> a,
                          std::span<const double> b,
                          std::span<const double> c) const override;
  double Partial(std::span<const double> x, std::size_t i) const override;
  double Partial2(std::span<const double> x, std::size_t i) const override;

 private:
  double PenaltyGradient(std::span<const double> x, std::size_t i,
                         double sum) const;

  BtlObservation obs_;
  PenaltySpec penalty_;
};

enum class BtlMode { kEmpirical, kExpected };

// In expected mode the wins are replaced by N_jm sigma(u*_j - u*_m), which
// requires `truth`.
std::shared_ptr<const BtlObjective> MakeBtlObjective(
    const BtlObservation& obs, const PenaltySpec& penalty, BtlMode mode,
    const std::optional<ScoreVector>& truth = std::nullopt);

// Penalized Fisher matrix at u; independent of the wins.
SymMatrix BtlFisher(const ComparisonGraph& graph, const PenaltySpec& penalty,
                    std::span<const double> u);

// grad L - grad E L, which does not depend on the evaluation point.
Vector NoiseGradient(const BtlObservation& obs, const ScoreVector& truth);

// True when the penalized MLE exists: a ridge penalty, or a connected
// comparison graph whose win relation is strongly connected.
bool MleExists(const BtlObservation& obs, const PenaltySpec& penalty);

enum class MleSolver { kNewton, kCoordinate };

// Minimizes the empirical objective from zero. Reports kNoMinimizer, not
// converged, when the MLE does not exist (perfect win or loss records).
SolveReport FitPenalizedMle(const BtlObservation& obs,
                            const PenaltySpec& penalty,
                            MleSolver solver = MleSolver::kNewton,
                            double tol = tol::kSolverGradient);

// min_j (F_jj - sum_{m != j} |F_jm|) / F_jj; positive means strictly
// diagonally dominant.
double DiagonalDominanceMargin(const SymMatrix& f);

struct BtlConstantsReport {
  ConditionConstants upper;
  // l2 only: sampled lower estimates of the same sups.
  std::optional<ConditionConstants> lower;
};

// Smoothness constants of the penalized likelihood around `center`.
//
// Sup-norm: exact per-coordinate constants over the local set of radius
// radii.target, using the separable edge structure. `metric` is diagonal of
// dimension n. `split` is ignored.
//
// l2: requires `split`; `metric` carries D on the target coordinates and H on
// the nuisance coordinates. Returns a rigorous envelope (|phi'''| <= phi''
// and phi'' log-Lipschitz) and a Monte Carlo lower estimate over 256
// directions.
BtlConstantsReport BtlConditionConstants(
    const ComparisonGraph& graph, const PenaltySpec& penalty,
    const ScoreVector& center, const Radii& radii, const MetricTensor& metric,
    NormTag norm, const std::optional<BlockSplit>& split = std::nullopt,
    std::uint64_t seed = 0);

}  // namespace perturbopt

#endif  // PERTURBOPT_BTL_H_
