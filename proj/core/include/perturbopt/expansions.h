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

// Scalar diagnostics of the perturbation expansions and residual checkers
// that compare measured expansion errors against their theoretical bounds.
//
// Notation: upsilon* minimizes f, F = nabla^2 f(upsilon*), D is a metric on
// the target block and H one on the nuisance block. For the sup-norm results
// D is diagonal and Delta = I - D^{-1} F D^{-1}.

#ifndef PERTURBOPT_EXPANSIONS_H_
#define PERTURBOPT_EXPANSIONS_H_

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "perturbopt/constants.h"
#include "perturbopt/matrix.h"
#include "perturbopt/objective.h"
#include "perturbopt/smooth_objective.h"

namespace perturbopt {

inline constexpr double kNotApplicable =
    std::numeric_limits<double>::quiet_NaN();

// Fields that do not apply to the requested flavor hold NaN.
struct ExpansionDiagnostics {
  double rho_dual = kNotApplicable;
  double rho_dual_l2 = kNotApplicable;
  double rho_star = kNotApplicable;
  double rho2 = kNotApplicable;
  double dltwb = kNotApplicable;
  double delta_nano = kNotApplicable;
  double delta_infty = kNotApplicable;
  double r_infty = kNotApplicable;
  double dinv_a = kNotApplicable;  // |D^{-1} A|_inf, sup-norm flavor
  bool prerequisites_hold = false;
};

// Three prerequisite flags per report. Their meaning depends on the variant:
//
//   sup-norm displays   dltwb: d21 r_inf <= 1/4
//                       d12r:  d12 r_inf <= 1/4 and the constants cover r_inf
//                       dinf:  delta_inf |D^{-1} A|_inf <= sqrt(2) - 1
//   partial bias and    dltwb: the dltwb condition of the result
//   perturbed partial   d12r:  r_theta >= rho2 |H(nu - nu*)| <= r_nu
//                       dinf:  rho2 tau3 r_nu <= 2/3
//   value defect        dltwb: D^2 <= kappa^2 F_nu
//                       d12r:  r_theta >= 1.5 |D F_nu^{-1} A_nu|
//                       dinf:  kappa^2 tau3 |D F_nu^{-1} A_nu| < 4/9
struct PrerequisiteFlags {
  bool dltwb = false;
  bool d12r = false;
  bool dinf = false;

  bool All() const { return dltwb && d12r && dinf; }
};

struct ResidualReport {
  std::string variant;
  double leading = 0;    // size of the first-order term
  double remainder = 0;  // measured error of the expansion
  double bound = 0;      // theoretical bound on the remainder
  // remainder <= bound + 1e-10 max(1, leading), the allowance covering the
  // accuracy of the inner solves.
  bool holds = false;
  PrerequisiteFlags flags;
  // True when the flags hold, so that `holds` is a check of the theorem
  // rather than an informational comparison.
  bool asserted = false;
};

ResidualReport MakeReport(std::string variant, double leading, double remainder,
                          double bound, const PrerequisiteFlags& flags);

struct RhoDualResult {
  double exact = 0;  // max_j D_j^{-1} sum_{m != j} |F_jm| / D_m
  double l2 = 0;     // max_j (D_j^{-2} sum_{m != j} F_jm^2 / D_m^2)^{1/2}
};

RhoDualResult RhoDual(const SymMatrix& f, const MetricTensor& d);

struct RhoStarResult {
  double value = 0;
  EstimateMethod method = EstimateMethod::kExact;
};

// Operator norm of D^{-1} F_tn H^{-1} from the unit ball of the nuisance
// norm to the l2 norm. For the sup-norm the maximum over sign vectors is
// exact up to 20 nuisance coordinates; beyond that the sum of column norms
// is returned as an upper bound.
RhoStarResult RhoStar(const Matrix& f_tn, const MetricTensor& d,
                      const MetricTensor& h, NormTag nui_norm);

enum class Flavor { kSupNorm, kMarginal, kAo };

// Sup-norm: r_inf = sqrt(2) |D^{-1}A|_inf / (1 - rho) when `dinv_a` is given,
// otherwise r_inf = radii.target and |D^{-1}A|_inf is recovered from it.
// Marginal and AO flavors treat `rho` as rho*. Throws kDltwbTooLarge when
// dltwb >= 1 and kRhoNotLessThanOne for a sup-norm rho >= 1.
ExpansionDiagnostics DerivedConstants(
    double rho, const ConditionConstants& constants, Flavor flavor,
    std::optional<double> dinv_a = std::nullopt);

struct QMap {
  enum class Kind { kIdentity, kFisherSqrt, kCustom };
  Kind kind = Kind::kIdentity;
  Matrix custom;

  static QMap Identity() { return {}; }
  // Q = F_tt^{1/2}.
  static QMap FisherSqrt() { return {Kind::kFisherSqrt, {}}; }
  static QMap Custom(Matrix q) { return {Kind::kCustom, std::move(q)}; }
};

struct PartialMetric {
  MetricTensor d;  // target block, D^2 <= F_tt
  MetricTensor h;  // nuisance block
  NormTag nui_norm = NormTag::kL2;
};

struct PartialBiasResult {
  Vector nui;
  Vector theta_nu;
  ResidualReport bias;          // variant "partial_bias"
  ResidualReport value_defect;  // variant "value_defect"
  ExpansionDiagnostics diagnostics;
};

// For each nu: theta_nu = argmin f(., nu) and the remainder
// |Q {theta_nu - theta* + F_tt^{-1} F_tn (nu - nu*)}| against
// |Q F_tt^{-1} D| delta_nano |H (nu - nu*)|^2, plus the value expansion.
// The joint minimizer is computed at 1e-12 unless supplied. Throws
// kMetricDominanceViolated unless D^2 <= kappa^2 F_tt.
std::vector<PartialBiasResult> CheckPartialBias(
    const SmoothObjective& f, const BlockSplit& split,
    const std::vector<Vector>& nui_values, const PartialMetric& metric,
    const ConditionConstants& constants, const QMap& q = QMap::Identity(),
    const std::optional<Vector>& joint_minimizer = std::nullopt);

struct SupExpansionResult {
  Vector minimizer;  // upsilon*
  Vector perturbed;  // upsilon circle
  Vector shift;      // A, or M = t'(upsilon*) for a separable perturbation
  Vector metric;     // diagonal of D
  ExpansionDiagnostics diagnostics;
  // "i", "ii", "iii", "iv_diag", "iv_neumann"; the separable check adds the
  // informational "ii_printed" and "iii_printed".
  std::vector<ResidualReport> reports;

  const ResidualReport& Report(const std::string& variant) const;
};

// upsilon circle = argmin f + <A, .>. `d` must be diagonal; D_j^2 = F_jj is
// the usual choice.
SupExpansionResult CheckLinearSupExpansion(
    const SmoothObjective& f, const Vector& a,
    const ConditionConstants& constants, const MetricTensor& d,
    const std::optional<Vector>& joint_minimizer = std::nullopt);

// upsilon circle = argmin f + sum_j t_j, with M = t'(upsilon*), the curvature
// F = nabla^2 (f + t)(upsilon*) and D_j^2 = nabla^2 f(upsilon circle)_jj +
// t_j''(upsilon circle_j). The sign-consistent displays use
// upsilon circle - upsilon* ~ -F^{-1} M; the "_printed" variants flip the
// sign of M and are never asserted.
SupExpansionResult CheckSeparableSupExpansion(
    const SmoothObjective& f, const SeparableSpec& t,
    const ConditionConstants& constants,
    const std::optional<Vector>& joint_minimizer = std::nullopt);

struct PerturbedPartialResult {
  Vector nui;
  Vector theta_nu;
  ResidualReport expansion;     // variant "perturbed_partial"
  ResidualReport localization;  // variant "localization"
  ExpansionDiagnostics diagnostics;
};

// theta circle_nu = argmin_theta f(theta, nu) + <A, theta> with A on the
// target block.
std::vector<PerturbedPartialResult> CheckPerturbedPartial(
    const SmoothObjective& f, const BlockSplit& split, const Vector& a,
    const std::vector<Vector>& nui_values, const PartialMetric& metric,
    const ConditionConstants& constants, const QMap& q = QMap::Identity(),
    const std::optional<Vector>& joint_minimizer = std::nullopt);

struct SemiOrthogonalityReport {
  double max_cross = 0;  // max_nu |nabla_nu nabla_theta f(theta*, nu)|_inf
  double max_bias = 0;   // max_nu |D (theta_nu - theta*)|
  bool near_orthogonal = false;
  bool unbiased = false;
  // Semi-orthogonality should imply no bias.
  bool consistent() const { return !near_orthogonal || unbiased; }
};

SemiOrthogonalityReport SemiOrthogonalityProbe(
    const SmoothObjective& f, const BlockSplit& split,
    const std::vector<Vector>& nui_values, const MetricTensor& d,
    double zero_tol = 1e-9,
    const std::optional<Vector>& joint_minimizer = std::nullopt);

// Joint minimizer by damped Newton at 1e-12; throws kNoConvergence.
Vector SolveJointMinimizer(const SmoothObjective& f,
                           const std::optional<Vector>& start = std::nullopt);

// CSV `quantity,value` with one row per ExpansionDiagnostics field.
void WriteDiagnosticsCsv(std::ostream& out, const ExpansionDiagnostics& d);

// CSV `variant,leading,remainder,bound,holds,flag_dltwb,flag_d12r,flag_dinf`.
void WriteResidualCsv(std::ostream& out,
                      const std::vector<ResidualReport>& reports);

}  // namespace perturbopt

#endif  // PERTURBOPT_EXPANSIONS_H_
