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

// Alternating optimization over a (target, nuisance) split:
//
//   nu_t    = argmin_nu    f(theta_{t-1}, nu)
//   theta_t = argmin_theta f(theta, nu_t)
//
// together with its local convergence certificate. Errors are measured in
// the Fisher geometry of the joint minimizer.

#ifndef PERTURBOPT_AO_H_
#define PERTURBOPT_AO_H_

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perturbopt/constants.h"
#include "perturbopt/matrix.h"
#include "perturbopt/objective.h"
#include "perturbopt/smooth_objective.h"

namespace perturbopt {

// Per-step record of an AO run with T steps. Entries indexed by t = 0..T;
// quantities undefined at t = 0 (no nuisance iterate yet) hold NaN.
struct AoTrace {
  Vector theta_star;
  Vector nui_star;
  std::vector<Vector> theta;  // theta_0 .. theta_T
  std::vector<Vector> nui;    // nu_1 .. nu_T at positions 1..T; empty at 0
  Vector theta_err;           // |F_tt^{1/2} (theta_t - theta*)|
  Vector nui_err;             // |F_nn^{1/2} (nu_t - nu*)|
  // Residuals with P = F_tt^{-1/2} F_tn F_nn^{-1/2}, a_t and b_t the whitened
  // target and nuisance errors:
  //   eps_t   = a_t + P b_t
  //   alpha_t = b_t + P^T a_{t-1}
  // so that a_t - P P^T a_{t-1} = eps_t - P alpha_t. Both vanish for a
  // quadratic objective.
  Vector eps_norm;
  Vector alpha_norm;
  std::vector<Vector> eps;  // filled when residuals are recorded
  std::vector<Vector> alpha;
  Vector value;       // f(theta_t, nu_t); value[0] uses nu*
  Vector half_value;  // f(theta_{t-1}, nu_t)
  double ppt_norm = 0;

  std::size_t steps() const { return theta.empty() ? 0 : theta.size() - 1; }
};

struct AoOptions {
  int steps = 10;
  double inner_tol = 1e-12;
  // Joint minimizer; computed by damped Newton at 1e-12 when absent.
  std::optional<Vector> joint_minimizer;
  bool record_residual_vectors = false;
};

// Throws kInnerSolveFailed naming the step when a partial solve does not
// converge.
AoTrace AoRun(const SmoothObjective& f, const BlockSplit& split,
              std::span<const double> theta0, const AoOptions& options = {});

// Max sup-norm deviation of a_t from P P^T a_{t-1} over t = 1..steps, which
// is zero in exact arithmetic for a quadratic.
double QuadAoIdentityCheck(const QuadraticObjective& q, const BlockSplit& split,
                           std::span<const double> theta0, int steps);

struct AoCertificate {
  double rho_star = 0;  // |D^{-1} F_tn H^{-1}|, after kappa scaling
  double rho2 = 0;
  double delta_nano = 0;
  double dltwb = 0;  // max(d12, d21) * max(r_theta, r_nu)
  double tau3 = 0;   // effective constants entering the inequalities
  double d12 = 0;
  double d21 = 0;
  Radii radii;
  double start_gap = 0;  // |D (theta_0 - theta*)|
  double ppt_norm = 0;
  std::optional<double> kappa;

  struct Flags {
    bool dltwb_below_one = false;
    bool radius_theta = false;  // r_theta >= rho2^2 gap
    bool radius_nu = false;     // r_nu >= rho2 gap
    bool tau_radius = false;    // rho2 tau3 max(r) <= 2/3
    bool start = false;         // (1 + rho2^2) delta_nano gap < 1 - |PP^T|
  } flags;

  bool holds() const {
    return flags.dltwb_below_one && flags.radius_theta && flags.radius_nu &&
           flags.tau_radius && flags.start;
  }
};

// Throws kMetricDominanceViolated unless F - M^2 / kappa^2 is positive
// semidefinite up to rounding. `block` names the block in the message.
void RequireMetricDominance(const SymMatrix& f, const MetricTensor& m,
                            double kappa, const std::string& block);

// Throws kMetricDominanceViolated unless F_tt - D^2 and F_nn - H^2 are
// positive semidefinite (D^2 / kappa^2 and H^2 / kappa^2 when kappa is set).
AoCertificate CertifyConvergence(const BlockHessian& bh,
                                 const ConditionConstants& constants,
                                 double theta0_gap, const MetricTensor& d,
                                 const MetricTensor& h);

// Largest start gap for which every flag of `cert` holds; 0 when a
// gap-independent flag fails.
double MaxCertifiedGap(const AoCertificate& cert);

// D^2 = c diag(A) with the largest c such that D^2 <= A.
MetricTensor DominatedDiagonalMetric(const SymMatrix& a);

// Geometric mean of theta_err ratios after `burn_in` steps. Norms at or below
// `floor` count as converged and end the series; a series that converges
// immediately has rate 0. Throws kInsufficientSteps with fewer than three
// post-burn-in steps.
double EstimateRate(const AoTrace& trace, int burn_in = 1,
                    double floor = 1e-10);

// Per-step check of
//   |a_t| <= (|PP^T| + (1 + rho2^2) delta_nano |D e_{t-1}|) |a_{t-1}|
// and |eps_t| <= delta_nano rho2^2 |D e_{t-1}|^2, each with an absolute
// rounding allowance.
struct StepContractionReport {
  Vector lhs;
  Vector rhs;
  Vector eps_lhs;
  Vector eps_rhs;
  bool contraction_holds = true;
  bool eps_holds = true;
  double slack = 0;
};

StepContractionReport VerifyStepContraction(const AoTrace& trace,
                                            const AoCertificate& cert,
                                            const MetricTensor& d,
                                            double slack = 1e-10);

// CSV `step,theta_err,nui_err,eps_norm,alpha_norm`.
void WriteTraceCsv(std::ostream& out, const AoTrace& trace);

}  // namespace perturbopt

#endif  // PERTURBOPT_AO_H_
