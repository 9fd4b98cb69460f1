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

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "perturbopt/csv.h"
#include "perturbopt/error.h"
#include "perturbopt/linalg.h"
#include "perturbopt/tolerances.h"

namespace perturbopt {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Derived {
  double dltwb;
  double rho2;
  double delta_nano;
};

Derived DeriveConstants(double tau3, double d12, double d21, double rho_star,
                        double radius) {
  Derived out{std::max(d12, d21) * radius, kInf, kInf};
  if (out.dltwb >= 1.0) return out;
  const double inv = 1.0 / (1.0 - out.dltwb);
  out.rho2 = 1.5 * inv * (rho_star + 0.5 * out.dltwb);
  out.delta_nano =
      inv * (d12 * rho_star + 0.5 * d12 + tau3 * out.rho2 * out.rho2 / 3.0);
  return out;
}

}  // namespace

void RequireMetricDominance(const SymMatrix& f, const MetricTensor& m,
                            double kappa, const std::string& block) {
  Require(m.dim() == f.dim(), ErrorCode::kDimensionMismatch,
          "metric for the " + block + " block");
  const SymMatrix sq = m.Squared();
  SymMatrix diff(f.dim());
  double scale = 1.0;
  for (std::size_t i = 0; i < f.dim(); ++i) {
    for (std::size_t j = i; j < f.dim(); ++j) {
      diff.Set(i, j, f(i, j) - sq(i, j) / (kappa * kappa));
      scale = std::max(scale, std::abs(f(i, j)));
    }
  }
  const double lo = MinEigenvalue(diff);
  if (lo < -1e-10 * scale) {
    throw Error(ErrorCode::kMetricDominanceViolated,
                std::string("F - D^2 is not PSD on the ") + block +
                    " block (min eigenvalue " + std::to_string(lo) + ")");
  }
}

AoTrace AoRun(const SmoothObjective& f, const BlockSplit& split,
              std::span<const double> theta0, const AoOptions& options) {
  Require(split.dim() == f.dim(), ErrorCode::kDimensionMismatch,
          "split does not match the objective");
  Require(theta0.size() == split.p(), ErrorCode::kDimensionMismatch,
          "theta0 must have the target dimension");
  Require(options.steps >= 1, ErrorCode::kInvalidArgument,
          "AO needs at least one step");

  Vector joint;
  if (options.joint_minimizer) {
    Require(options.joint_minimizer->size() == f.dim(),
            ErrorCode::kDimensionMismatch, "joint minimizer");
    joint = *options.joint_minimizer;
  } else {
    NewtonOptions opts;
    opts.tol = tol::kJointSolve;
    const SolveReport r = NewtonMinimize(f, Vector(f.dim(), 0.0), opts);
    Require(SolveSucceeded(r, opts.tol), ErrorCode::kInnerSolveFailed,
            "joint minimizer did not converge (step 0)");
    joint = r.argmin;
  }

  AoTrace tr;
  tr.theta_star = split.Target(joint);
  tr.nui_star = split.Nuisance(joint);
  const BlockHessian bh = BlockHessian::From(f.Hessian(joint), split);
  const SymMatrix sqrt_tt = PsdPower(bh.f_tt, PsdExponent::kSqrt);
  const SymMatrix sqrt_nn = PsdPower(bh.f_nn, PsdExponent::kSqrt);
  const Contraction c = ContractionMatrix(bh);
  tr.ppt_norm = c.ppt_norm;

  const auto steps = static_cast<std::size_t>(options.steps);
  tr.theta.reserve(steps + 1);
  tr.nui.reserve(steps + 1);
  tr.theta.emplace_back(theta0.begin(), theta0.end());
  tr.nui.emplace_back();
  Vector a_prev = MatVec(sqrt_tt, Sub(tr.theta[0], tr.theta_star));
  tr.theta_err.push_back(Norm2(a_prev));
  tr.nui_err.push_back(kNaN);
  tr.eps_norm.push_back(kNaN);
  tr.alpha_norm.push_back(kNaN);
  if (options.record_residual_vectors) {
    tr.eps.emplace_back();
    tr.alpha.emplace_back();
  }
  tr.value.push_back(f.Value(split.Join(tr.theta[0], tr.nui_star)));
  tr.half_value.push_back(kNaN);

  Vector nu_warm = tr.nui_star;
  for (std::size_t t = 1; t <= steps; ++t) {
    const SolveReport rn =
        PartialMinimize(f, split, FixedBlock::kTarget, tr.theta[t - 1], nu_warm,
                        options.inner_tol);
    Require(SolveSucceeded(rn, options.inner_tol), ErrorCode::kInnerSolveFailed,
            "nuisance update failed at step " + std::to_string(t));
    const SolveReport rt =
        PartialMinimize(f, split, FixedBlock::kNuisance, rn.argmin,
                        tr.theta[t - 1], options.inner_tol);
    Require(SolveSucceeded(rt, options.inner_tol), ErrorCode::kInnerSolveFailed,
            "target update failed at step " + std::to_string(t));
    nu_warm = rn.argmin;

    const Vector a = MatVec(sqrt_tt, Sub(rt.argmin, tr.theta_star));
    const Vector b = MatVec(sqrt_nn, Sub(rn.argmin, tr.nui_star));
    const Vector eps = AddV(a, MatVec(c.p, b));
    const Vector alpha = AddV(b, MatTVec(c.p, a_prev));
    tr.theta_err.push_back(Norm2(a));
    tr.nui_err.push_back(Norm2(b));
    tr.eps_norm.push_back(Norm2(eps));
    tr.alpha_norm.push_back(Norm2(alpha));
    if (options.record_residual_vectors) {
      tr.eps.push_back(eps);
      tr.alpha.push_back(alpha);
    }
    tr.half_value.push_back(f.Value(split.Join(tr.theta[t - 1], rn.argmin)));
    tr.value.push_back(f.Value(split.Join(rt.argmin, rn.argmin)));
    tr.theta.push_back(rt.argmin);
    tr.nui.push_back(rn.argmin);
    a_prev = a;
  }
  return tr;
}

double QuadAoIdentityCheck(const QuadraticObjective& q, const BlockSplit& split,
                           std::span<const double> theta0, int steps) {
  AoOptions opts;
  opts.steps = steps;
  opts.joint_minimizer = q.minimizer();
  const AoTrace tr = AoRun(q, split, theta0, opts);
  const BlockHessian bh = BlockHessian::From(q.curvature(), split);
  const SymMatrix sqrt_tt = PsdPower(bh.f_tt, PsdExponent::kSqrt);
  const Contraction c = ContractionMatrix(bh);
  const Matrix ppt = MatMul(c.p, c.p.Transpose());
  double dev = 0.0;
  Vector prev = MatVec(sqrt_tt, Sub(tr.theta[0], tr.theta_star));
  for (std::size_t t = 1; t <= tr.steps(); ++t) {
    const Vector a = MatVec(sqrt_tt, Sub(tr.theta[t], tr.theta_star));
    dev = std::max(dev, NormInf(Sub(a, MatVec(ppt, prev))));
    prev = a;
  }
  return dev;
}

AoCertificate CertifyConvergence(const BlockHessian& bh,
                                 const ConditionConstants& constants,
                                 double theta0_gap, const MetricTensor& d,
                                 const MetricTensor& h) {
  constants.Validate();
  Require(theta0_gap >= 0.0 && std::isfinite(theta0_gap),
          ErrorCode::kInvalidArgument, "start gap must be finite");
  const double kappa = constants.kappa.value_or(1.0);
  RequireMetricDominance(bh.f_tt, d, kappa, "target");
  RequireMetricDominance(bh.f_nn, h, kappa, "nuisance");

  const Matrix scaled =
      MatMul(MatMul(d.InverseMatrix(), bh.f_tn), h.InverseMatrix());
  const double rho_raw = SpectralNorm(scaled);
  const double radius = constants.radii.Max();

  AoCertificate cert;
  cert.radii = constants.radii;
  cert.start_gap = theta0_gap;
  cert.ppt_norm = ContractionMatrix(bh).ppt_norm;
  cert.kappa = constants.kappa;
  cert.tau3 = constants.tau3;
  cert.d12 = constants.d12;
  cert.d21 = constants.d21;
  cert.rho_star = rho_raw;
  const Derived raw = DeriveConstants(constants.tau3, constants.d12,
                                      constants.d21, rho_raw, radius);
  Derived eff = raw;
  if (constants.kappa) {
    cert.tau3 = constants.tau3 * kappa * kappa * kappa;
    cert.d12 = constants.d12 * kappa;
    cert.d21 = constants.d21 * kappa * kappa;
    cert.rho_star = rho_raw / kappa;
    eff = DeriveConstants(cert.tau3, cert.d12, cert.d21, cert.rho_star, radius);
    eff.delta_nano =
        raw.dltwb < 1.0 && eff.dltwb < 1.0 ? kappa * raw.delta_nano : kInf;
  }
  cert.dltwb = eff.dltwb;
  cert.rho2 = eff.rho2;
  cert.delta_nano = eff.delta_nano;

  auto& fl = cert.flags;
  fl.dltwb_below_one = raw.dltwb < 1.0 && eff.dltwb < 1.0;
  if (fl.dltwb_below_one) {
    const double r2 = cert.rho2 * cert.rho2;
    fl.radius_theta = constants.radii.target >= r2 * theta0_gap;
    fl.radius_nu = constants.radii.nuisance >= cert.rho2 * theta0_gap;
    fl.tau_radius = cert.rho2 * cert.tau3 * radius <= 2.0 / 3.0;
    fl.start = (1.0 + r2) * cert.delta_nano * theta0_gap < 1.0 - cert.ppt_norm;
  }
  return cert;
}

double MaxCertifiedGap(const AoCertificate& cert) {
  const auto& fl = cert.flags;
  if (!fl.dltwb_below_one || !fl.tau_radius || cert.ppt_norm >= 1.0) {
    return 0.0;
  }
  const double r2 = cert.rho2 * cert.rho2;
  double gap = kInf;
  if (r2 > 0.0) gap = std::min(gap, cert.radii.target / r2);
  if (cert.rho2 > 0.0) gap = std::min(gap, cert.radii.nuisance / cert.rho2);
  const double k = (1.0 + r2) * cert.delta_nano;
  if (k > 0.0) gap = std::min(gap, (1.0 - cert.ppt_norm) / k);
  return gap;
}

MetricTensor DominatedDiagonalMetric(const SymMatrix& a) {
  const std::size_t n = a.dim();
  Vector s(n);
  for (std::size_t i = 0; i < n; ++i) {
    Require(a(i, i) > 0.0, ErrorCode::kNotPositiveDefinite,
            "diagonal entries must be positive");
    s[i] = std::sqrt(a(i, i));
  }
  SymMatrix b(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) b.Set(i, j, a(i, j) / (s[i] * s[j]));
  }
  // Shrink slightly so that rounding in the eigenvalue cannot break D^2 <= A.
  const double c = MinEigenvalue(b) * (1.0 - 1e-10);
  Require(c > 0.0, ErrorCode::kNotPositiveDefinite,
          "matrix is not positive definite");
  for (double& v : s) v *= std::sqrt(c);
  return MetricTensor::Diagonal(std::move(s));
}

double EstimateRate(const AoTrace& trace, int burn_in, double floor) {
  Require(burn_in >= 0, ErrorCode::kInvalidArgument,
          "burn_in must be nonnegative");
  const auto b = static_cast<std::size_t>(burn_in);
  const std::size_t steps = trace.steps();
  if (steps < b + 3) {
    throw Error(ErrorCode::kInsufficientSteps,
                "need at least 3 steps after burn-in, have " +
                    std::to_string(steps > b ? steps - b : 0));
  }
  const Vector& e = trace.theta_err;
  if (e[b] <= floor) return 0.0;
  std::size_t last = b;
  while (last < steps && e[last + 1] > floor) ++last;
  if (last == b) return 0.0;
  const double k = static_cast<double>(last - b);
  return std::pow(e[last] / e[b], 1.0 / k);
}

StepContractionReport VerifyStepContraction(const AoTrace& trace,
                                            const AoCertificate& cert,
                                            const MetricTensor& d,
                                            double slack) {
  Require(d.dim() == trace.theta_star.size(), ErrorCode::kDimensionMismatch,
          "metric for the target block");
  StepContractionReport r;
  r.slack = slack;
  const double k = (1.0 + cert.rho2 * cert.rho2) * cert.delta_nano;
  for (std::size_t t = 1; t <= trace.steps(); ++t) {
    const double gap =
        Norm2(d.Apply(Sub(trace.theta[t - 1], trace.theta_star)));
    // 0 * inf stays 0 when the nonlinear constants vanish.
    const double grow = gap == 0.0 ? 0.0 : k * gap;
    const double rhs = (cert.ppt_norm + grow) * trace.theta_err[t - 1];
    r.lhs.push_back(trace.theta_err[t]);
    r.rhs.push_back(rhs);
    if (!(trace.theta_err[t] <= rhs + slack)) r.contraction_holds = false;
    const double eps_rhs =
        gap == 0.0 ? 0.0 : cert.delta_nano * cert.rho2 * cert.rho2 * gap * gap;
    r.eps_lhs.push_back(trace.eps_norm[t]);
    r.eps_rhs.push_back(eps_rhs);
    if (!(trace.eps_norm[t] <= eps_rhs + slack)) r.eps_holds = false;
  }
  return r;
}

void WriteTraceCsv(std::ostream& out, const AoTrace& trace) {
  out << "step,theta_err,nui_err,eps_norm,alpha_norm\n";
  for (std::size_t t = 0; t <= trace.steps(); ++t) {
    out << t << ',' << FormatDouble(trace.theta_err[t]) << ','
        << FormatDouble(trace.nui_err[t]) << ','
        << FormatDouble(trace.eps_norm[t]) << ','
        << FormatDouble(trace.alpha_norm[t]) << '\n';
  }
}

}  // namespace perturbopt
