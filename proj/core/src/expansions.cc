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

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <utility>

#include "perturbopt/ao.h"
#include "perturbopt/csv.h"
#include "perturbopt/error.h"
#include "perturbopt/linalg.h"
#include "perturbopt/tolerances.h"

namespace perturbopt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Wraps a reference for APIs taking ObjectivePtr; the caller keeps ownership.
ObjectivePtr Borrow(const SmoothObjective& f) {
  return ObjectivePtr(ObjectivePtr(), &f);
}

double NuiNorm(std::span<const double> x, NormTag tag) {
  return tag == NormTag::kL2 ? Norm2(x) : NormInf(x);
}

// Q as a dense p x p matrix.
Matrix QMatrix(const QMap& q, const SymMatrix& f_tt) {
  const std::size_t p = f_tt.dim();
  switch (q.kind) {
    case QMap::Kind::kIdentity:
      return Matrix::Identity(p);
    case QMap::Kind::kFisherSqrt:
      return PsdPower(f_tt, PsdExponent::kSqrt).matrix();
    case QMap::Kind::kCustom:
      Require(q.custom.cols() == p && q.custom.rows() > 0,
              ErrorCode::kDimensionMismatch,
              "custom Q must have the target dimension as column count");
      return q.custom;
  }
  return Matrix::Identity(p);
}

bool Dominated(const SymMatrix& f, const MetricTensor& m, double kappa) {
  try {
    RequireMetricDominance(f, m, kappa, "target");
    return true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kMetricDominanceViolated) throw;
    return false;
  }
}

PrerequisiteFlags SupFlags(const ExpansionDiagnostics& d,
                           const ConditionConstants& c) {
  PrerequisiteFlags fl;
  if (!std::isfinite(d.dltwb) || !std::isfinite(d.delta_infty)) return fl;
  fl.dltwb = d.dltwb <= 0.25;
  fl.d12r =
      c.d12 * d.r_infty <= 0.25 && c.radii.target >= d.r_infty * (1.0 - 1e-12);
  fl.dinf = d.delta_infty * d.dinv_a <= std::sqrt(2.0) - 1.0;
  return fl;
}

struct MarginalParts {
  double dltwb;
  double rho2;
  double delta_nano;
};

MarginalParts Marginal(double tau3, double d12, double d21, double rho,
                       double r) {
  MarginalParts out{d21 * r, kInf, kInf};
  if (out.dltwb >= 1.0) return out;
  const double inv = 1.0 / (1.0 - out.dltwb);
  out.rho2 = 1.5 * inv * (rho + 0.5 * d12 * r);
  out.delta_nano =
      inv * (rho * d21 + 0.5 * d12 + out.rho2 * out.rho2 * tau3 / 3.0);
  return out;
}

MarginalParts Alternating(double tau3, double d12, double d21, double rho,
                          double r) {
  MarginalParts out{std::max(d12, d21) * r, kInf, kInf};
  if (out.dltwb >= 1.0) return out;
  const double inv = 1.0 / (1.0 - out.dltwb);
  out.rho2 = 1.5 * inv * (rho + 0.5 * out.dltwb);
  out.delta_nano =
      inv * (d12 * rho + 0.5 * d12 + tau3 * out.rho2 * out.rho2 / 3.0);
  return out;
}

struct Effective {
  double tau3, d12, d21, rho;
};

Effective KappaScaled(const ConditionConstants& c, double rho) {
  if (!c.kappa) return {c.tau3, c.d12, c.d21, rho};
  const double k = *c.kappa;
  return {c.tau3 * k * k * k, c.d12 * k, c.d21 * k * k, rho / k};
}

// Diagnostics for the block results, or a copy with dltwb = +inf when the
// condition fails.
ExpansionDiagnostics MarginalOrFailed(double rho_star,
                                      const ConditionConstants& c) {
  try {
    return DerivedConstants(rho_star, c, Flavor::kMarginal);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDltwbTooLarge) throw;
    ExpansionDiagnostics d;
    d.rho_star = rho_star;
    d.dltwb = kInf;
    return d;
  }
}

// The five sup-norm displays for x = upsilon circle - upsilon* against the
// curvature f and the shift s (A or M).
void SupReports(const SymMatrix& f, const Vector& dvec, const Vector& s,
                const Vector& x, const ConditionConstants& c,
                SupExpansionResult& out) {
  const MetricTensor d = MetricTensor::Diagonal(dvec);
  const RhoDualResult rd = RhoDual(f, d);
  const double a = NormInf(d.ApplyInverse(s));

  ExpansionDiagnostics diag;
  diag.rho_dual = rd.exact;
  diag.rho_dual_l2 = rd.l2;
  diag.dinv_a = a;
  if (rd.exact < 1.0) {
    try {
      diag = DerivedConstants(rd.exact, c, Flavor::kSupNorm, a);
      diag.rho_dual_l2 = rd.l2;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDltwbTooLarge) throw;
      diag.r_infty = std::sqrt(2.0) * a / (1.0 - rd.exact);
      diag.dltwb = kInf;
    }
  }
  out.diagnostics = diag;
  const PrerequisiteFlags fl = SupFlags(diag, c);

  const double rho = rd.exact;
  const bool finite = rho < 1.0 && std::isfinite(diag.delta_infty);
  const double q2 = finite ? diag.delta_infty * a * a : kInf;
  const double q3 = finite ? q2 / (1.0 - rho) : kInf;

  const Vector finv_s = SpdSolve(f, s);
  const Vector u = d.ApplyInverse(s);
  const Vector dx = d.Apply(x);
  const Vector fx_s = AddV(MatVec(f, x), s);

  out.reports.push_back(MakeReport(
      "i", NormInf(d.Apply(finv_s)), NormInf(dx),
      std::isfinite(diag.r_infty) && rho < 1.0 ? diag.r_infty : kInf, fl));
  out.reports.push_back(
      MakeReport("ii", a, NormInf(d.ApplyInverse(fx_s)), q2, fl));
  out.reports.push_back(MakeReport("iii", NormInf(d.Apply(finv_s)),
                                   NormInf(d.Apply(AddV(x, finv_s))), q3, fl));
  out.reports.push_back(MakeReport("iv_diag", a, NormInf(AddV(dx, u)),
                                   finite ? q3 + rho / (1.0 - rho) * a : kInf,
                                   fl));

  // (I + Delta) u = 2u - D^{-1} F D^{-1} u
  const Vector w =
      Sub(Scale(u, 2.0), d.ApplyInverse(MatVec(f, d.ApplyInverse(u))));
  out.reports.push_back(
      MakeReport("iv_neumann", NormInf(w), NormInf(AddV(dx, w)),
                 finite ? q3 + rho * rho / (1.0 - rho) * a : kInf, fl));
}

Vector SolveOrThrow(const SmoothObjective& g, std::span<const double> start,
                    const char* what) {
  NewtonOptions opts;
  opts.tol = tol::kJointSolve;
  const SolveReport r = NewtonMinimize(g, start, opts);
  Require(SolveSucceeded(r, opts.tol), ErrorCode::kNoConvergence,
          std::string(what) + " did not converge (grad " +
              FormatDouble(r.final_grad_supnorm) + ")");
  return r.argmin;
}

Vector PartialOrThrow(const SmoothObjective& f, const BlockSplit& split,
                      std::span<const double> nu,
                      std::span<const double> warm) {
  const SolveReport r = PartialMinimize(f, split, FixedBlock::kNuisance, nu,
                                        warm, tol::kJointSolve);
  Require(SolveSucceeded(r, tol::kJointSolve), ErrorCode::kInnerSolveFailed,
          "partial minimization over the target block did not converge");
  return r.argmin;
}

void RequireNuisance(const BlockSplit& split, const SmoothObjective& f,
                     const PartialMetric& metric,
                     const std::vector<Vector>& nui_values) {
  Require(split.dim() == f.dim(), ErrorCode::kDimensionMismatch,
          "split does not match the objective");
  Require(split.p() > 0 && split.q() > 0, ErrorCode::kInvalidArgument,
          "both blocks must be nonempty");
  Require(metric.d.dim() == split.p() && metric.h.dim() == split.q(),
          ErrorCode::kDimensionMismatch, "metric does not match the split");
  for (const Vector& nu : nui_values) {
    Require(nu.size() == split.q(), ErrorCode::kDimensionMismatch,
            "nuisance value must have the nuisance dimension");
  }
}

}  // namespace

ResidualReport MakeReport(std::string variant, double leading, double remainder,
                          double bound, const PrerequisiteFlags& flags) {
  ResidualReport r;
  r.variant = std::move(variant);
  r.leading = leading;
  r.remainder = remainder;
  r.bound = bound;
  r.holds = remainder <= bound + tol::kResidualSlack * std::max(1.0, leading);
  r.flags = flags;
  r.asserted = flags.All();
  return r;
}

RhoDualResult RhoDual(const SymMatrix& f, const MetricTensor& d) {
  Require(d.is_diagonal(), ErrorCode::kInvalidArgument,
          "rho_dual needs a diagonal metric");
  Require(d.dim() == f.dim(), ErrorCode::kDimensionMismatch,
          "metric does not match the curvature");
  const Vector& dv = d.diagonal();
  RhoDualResult out;
  for (std::size_t j = 0; j < f.dim(); ++j) {
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t m = 0; m < f.dim(); ++m) {
      if (m == j) continue;
      const double v = f(j, m) / (dv[j] * dv[m]);
      s1 += std::abs(v);
      s2 += v * v;
    }
    out.exact = std::max(out.exact, s1);
    out.l2 = std::max(out.l2, std::sqrt(s2));
  }
  return out;
}

RhoStarResult RhoStar(const Matrix& f_tn, const MetricTensor& d,
                      const MetricTensor& h, NormTag nui_norm) {
  Require(d.dim() == f_tn.rows() && h.dim() == f_tn.cols(),
          ErrorCode::kDimensionMismatch, "metrics do not match F_tn");
  Require(f_tn.cols() > 0, ErrorCode::kInvalidArgument,
          "nuisance block is empty");
  const Matrix b = MatMul(MatMul(d.InverseMatrix(), f_tn), h.InverseMatrix());
  if (nui_norm == NormTag::kL2) {
    return {SpectralNorm(b), EstimateMethod::kExact};
  }
  const std::size_t p = b.rows();
  const std::size_t q = b.cols();
  if (q > static_cast<std::size_t>(tol::kSignVectorMaxDim)) {
    double sum = 0.0;
    for (std::size_t k = 0; k < q; ++k) sum += Norm2(b.Column(k));
    return {sum, EstimateMethod::kEnvelope};
  }
  // z and -z give the same norm, so the first sign stays +1 and a Gray code
  // walks the remaining 2^{q-1} patterns with one column update each.
  std::vector<double> z(q, 1.0);
  Vector v(p, 0.0);
  auto recompute = [&] { v = MatVec(b, z); };
  recompute();
  double best = Norm2(v);
  const std::uint64_t count = std::uint64_t{1} << (q - 1);
  for (std::uint64_t i = 1; i < count; ++i) {
    const std::size_t k = 1 + static_cast<std::size_t>(std::countr_zero(i));
    z[k] = -z[k];
    if ((i & 1023u) == 0) {
      recompute();
    } else {
      for (std::size_t r = 0; r < p; ++r) v[r] += 2.0 * z[k] * b(r, k);
    }
    best = std::max(best, Norm2(v));
  }
  return {best, EstimateMethod::kExact};
}

ExpansionDiagnostics DerivedConstants(double rho,
                                      const ConditionConstants& constants,
                                      Flavor flavor,
                                      std::optional<double> dinv_a) {
  constants.Validate();
  Require(std::isfinite(rho) && rho >= 0.0, ErrorCode::kInvalidArgument,
          "rho must be finite and nonnegative");
  const ConditionConstants& c = constants;
  ExpansionDiagnostics out;

  if (flavor == Flavor::kSupNorm) {
    Require(rho < 1.0, ErrorCode::kRhoNotLessThanOne,
            "rho_dual = " + FormatDouble(rho));
    out.rho_dual = rho;
    if (dinv_a) {
      Require(*dinv_a >= 0.0 && std::isfinite(*dinv_a),
              ErrorCode::kInvalidArgument, "|D^{-1}A| must be finite");
      out.dinv_a = *dinv_a;
      out.r_infty = std::sqrt(2.0) * *dinv_a / (1.0 - rho);
    } else {
      out.r_infty = c.radii.target;
      out.dinv_a = out.r_infty * (1.0 - rho) / std::sqrt(2.0);
    }
    out.dltwb = c.d21 * out.r_infty;
    Require(out.dltwb < 1.0, ErrorCode::kDltwbTooLarge,
            "d21 r_inf = " + FormatDouble(out.dltwb));
    const double inv = 1.0 / (1.0 - out.dltwb);
    const double lead = rho + 0.5 * out.dltwb;
    out.delta_nano = inv * (rho * c.d21 + 0.5 * c.d12 +
                            3.0 * lead * lead * c.tau3 * 0.25 * inv * inv);
    const double om = 1.0 - rho;
    out.delta_infty =
        2.0 * c.tau3 + 0.5 * c.d21 + 2.0 * (out.delta_nano + c.d21) / (om * om);
    out.prerequisites_hold = SupFlags(out, c).All();
    return out;
  }

  out.rho_star = rho;
  const bool ao = flavor == Flavor::kAo;
  const double radius = ao ? c.radii.Max() : c.radii.nuisance;
  auto derive = ao ? Alternating : Marginal;
  const MarginalParts raw = derive(c.tau3, c.d12, c.d21, rho, radius);
  const Effective e = KappaScaled(c, rho);
  MarginalParts eff = raw;
  if (c.kappa) {
    eff = derive(e.tau3, e.d12, e.d21, e.rho, radius);
    eff.delta_nano = *c.kappa * raw.delta_nano;
  }
  Require(raw.dltwb < 1.0 && eff.dltwb < 1.0, ErrorCode::kDltwbTooLarge,
          "dltwb = " + FormatDouble(std::max(raw.dltwb, eff.dltwb)));
  out.rho_star = e.rho;
  out.dltwb = eff.dltwb;
  out.rho2 = eff.rho2;
  out.delta_nano = eff.delta_nano;
  out.prerequisites_hold = eff.rho2 * e.tau3 * radius <= 2.0 / 3.0;
  return out;
}

const ResidualReport& SupExpansionResult::Report(
    const std::string& variant) const {
  for (const ResidualReport& r : reports) {
    if (r.variant == variant) return r;
  }
  throw Error(ErrorCode::kInvalidArgument, "no report named " + variant);
}

Vector SolveJointMinimizer(const SmoothObjective& f,
                           const std::optional<Vector>& start) {
  const Vector x0 = start.value_or(Vector(f.dim(), 0.0));
  Require(x0.size() == f.dim(), ErrorCode::kDimensionMismatch,
          "start must have the objective dimension");
  return SolveOrThrow(f, x0, "joint minimization");
}

std::vector<PartialBiasResult> CheckPartialBias(
    const SmoothObjective& f, const BlockSplit& split,
    const std::vector<Vector>& nui_values, const PartialMetric& metric,
    const ConditionConstants& constants, const QMap& q,
    const std::optional<Vector>& joint_minimizer) {
  constants.Validate();
  RequireNuisance(split, f, metric, nui_values);
  const Vector joint =
      joint_minimizer ? *joint_minimizer : SolveJointMinimizer(f);
  Require(joint.size() == f.dim(), ErrorCode::kDimensionMismatch,
          "joint minimizer has the wrong dimension");
  const Vector theta_star = split.Target(joint);
  const Vector nu_star = split.Nuisance(joint);
  const BlockHessian bh = BlockHessian::From(f.Hessian(joint), split);
  const double kappa = constants.kappa.value_or(1.0);
  RequireMetricDominance(bh.f_tt, metric.d, kappa, "target");

  const Cholesky chol = Cholesky::Factor(bh.f_tt);
  const Matrix qm = QMatrix(q, bh.f_tt);
  const double qnorm =
      SpectralNorm(MatMul(qm, chol.Solve(metric.d.AsMatrix())));
  const RhoStarResult rs =
      RhoStar(bh.f_tn, metric.d, metric.h, metric.nui_norm);
  const ExpansionDiagnostics diag = MarginalOrFailed(rs.value, constants);
  const bool dltwb_ok = std::isfinite(diag.dltwb);
  const Effective e = KappaScaled(constants, rs.value);
  const double r_nu = constants.radii.nuisance;

  std::vector<PartialBiasResult> out;
  out.reserve(nui_values.size());
  for (const Vector& nu : nui_values) {
    PartialBiasResult res;
    res.nui = nu;
    res.diagnostics = diag;
    res.theta_nu = PartialOrThrow(f, split, nu, theta_star);

    const Vector dnu = Sub(nu, nu_star);
    const double hn = NuiNorm(metric.h.Apply(dnu), metric.nui_norm);
    const Vector lead = Scale(chol.Solve(MatVec(bh.f_tn, dnu)), -1.0);
    const Vector rem = Sub(Sub(res.theta_nu, theta_star), lead);

    PrerequisiteFlags fl;
    fl.dltwb = dltwb_ok;
    if (dltwb_ok) {
      fl.d12r = constants.radii.target >= diag.rho2 * hn && hn <= r_nu;
      fl.dinf = diag.rho2 * e.tau3 * r_nu <= 2.0 / 3.0;
    }
    res.bias = MakeReport(
        "partial_bias", Norm2(MatVec(qm, lead)), Norm2(MatVec(qm, rem)),
        dltwb_ok ? qnorm * diag.delta_nano * hn * hn : kInf, fl);

    // Value expansion around theta* at fixed nu.
    const Vector point = split.Join(theta_star, nu);
    const Vector a_nu = split.Target(f.Gradient(point));
    const SymMatrix f_nu = Submatrix(f.Hessian(point), split.target());
    const Vector w = SpdSolve(f_nu, a_nu);
    const double dfa = Norm2(metric.d.Apply(w));
    const double defect = std::abs(2.0 * f.Value(split.Join(res.theta_nu, nu)) -
                                   2.0 * f.Value(point) + Dot(a_nu, w));
    PrerequisiteFlags vf;
    vf.dltwb = Dominated(f_nu, metric.d, kappa);
    vf.d12r = constants.radii.target >= 1.5 * dfa;
    vf.dinf = kappa * kappa * constants.tau3 * dfa < 4.0 / 9.0;
    res.value_defect = MakeReport("value_defect", Dot(a_nu, w), defect,
                                  2.5 * constants.tau3 * dfa * dfa * dfa, vf);
    out.push_back(std::move(res));
  }
  return out;
}

SupExpansionResult CheckLinearSupExpansion(
    const SmoothObjective& f, const Vector& a,
    const ConditionConstants& constants, const MetricTensor& d,
    const std::optional<Vector>& joint_minimizer) {
  constants.Validate();
  Require(a.size() == f.dim() && d.dim() == f.dim(),
          ErrorCode::kDimensionMismatch,
          "shift and metric must have the objective dimension");
  Require(d.is_diagonal(), ErrorCode::kInvalidArgument,
          "sup-norm expansions need a diagonal metric");
  SupExpansionResult out;
  out.minimizer = joint_minimizer ? *joint_minimizer : SolveJointMinimizer(f);
  const ObjectivePtr g = LinearPerturb(Borrow(f), a);
  out.perturbed = SolveOrThrow(*g, out.minimizer, "perturbed minimization");
  out.shift = a;
  out.metric = d.diagonal();
  SupReports(f.Hessian(out.minimizer), out.metric, a,
             Sub(out.perturbed, out.minimizer), constants, out);
  return out;
}

SupExpansionResult CheckSeparableSupExpansion(
    const SmoothObjective& f, const SeparableSpec& t,
    const ConditionConstants& constants,
    const std::optional<Vector>& joint_minimizer) {
  constants.Validate();
  Require(t.size() == f.dim(), ErrorCode::kDimensionMismatch,
          "one separable term per coordinate");
  SupExpansionResult out;
  out.minimizer = joint_minimizer ? *joint_minimizer : SolveJointMinimizer(f);
  const ObjectivePtr g = SeparablePerturb(Borrow(f), t);
  out.perturbed = SolveOrThrow(*g, out.minimizer, "perturbed minimization");

  const std::size_t n = f.dim();
  out.shift.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.shift[j] = t[j].d1(out.minimizer[j]);
  const SymMatrix h_at = g->Hessian(out.perturbed);
  out.metric.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    Require(h_at(j, j) > 0.0, ErrorCode::kNotPositiveDefinite,
            "perturbed curvature has a nonpositive diagonal entry");
    out.metric[j] = std::sqrt(h_at(j, j));
  }
  const SymMatrix curv = g->Hessian(out.minimizer);
  const Vector x = Sub(out.perturbed, out.minimizer);
  SupReports(curv, out.metric, out.shift, x, constants, out);

  // The same displays with the sign of M flipped, for comparison only.
  const MetricTensor d = MetricTensor::Diagonal(out.metric);
  const Vector neg = Scale(out.shift, -1.0);
  const ResidualReport& ii = out.Report("ii");
  const ResidualReport& iii = out.Report("iii");
  ResidualReport pii = MakeReport(
      "ii_printed", ii.leading,
      NormInf(d.ApplyInverse(AddV(MatVec(curv, x), neg))), ii.bound, ii.flags);
  ResidualReport piii = MakeReport(
      "iii_printed", iii.leading,
      NormInf(d.Apply(AddV(x, SpdSolve(curv, neg)))), iii.bound, iii.flags);
  pii.asserted = false;
  piii.asserted = false;
  out.reports.push_back(std::move(pii));
  out.reports.push_back(std::move(piii));
  return out;
}

std::vector<PerturbedPartialResult> CheckPerturbedPartial(
    const SmoothObjective& f, const BlockSplit& split, const Vector& a,
    const std::vector<Vector>& nui_values, const PartialMetric& metric,
    const ConditionConstants& constants, const QMap& q,
    const std::optional<Vector>& joint_minimizer) {
  constants.Validate();
  RequireNuisance(split, f, metric, nui_values);
  Require(a.size() == split.p(), ErrorCode::kDimensionMismatch,
          "shift must have the target dimension");
  const Vector joint =
      joint_minimizer ? *joint_minimizer : SolveJointMinimizer(f);
  Require(joint.size() == f.dim(), ErrorCode::kDimensionMismatch,
          "joint minimizer has the wrong dimension");
  const Vector theta_star = split.Target(joint);
  const Vector nu_star = split.Nuisance(joint);
  const BlockHessian bh = BlockHessian::From(f.Hessian(joint), split);
  const double kappa = constants.kappa.value_or(1.0);
  RequireMetricDominance(bh.f_tt, metric.d, kappa, "target");

  const ObjectivePtr g =
      LinearPerturb(Borrow(f), split.Join(a, Vector(split.q(), 0.0)));
  const Cholesky chol = Cholesky::Factor(bh.f_tt);
  const Matrix qm = QMatrix(q, bh.f_tt);
  const double qnorm =
      SpectralNorm(MatMul(qm, chol.Solve(metric.d.AsMatrix())));
  const RhoStarResult rs =
      RhoStar(bh.f_tn, metric.d, metric.h, metric.nui_norm);
  const ExpansionDiagnostics diag = MarginalOrFailed(rs.value, constants);
  const bool base_ok = std::isfinite(diag.dltwb);
  const Effective e = KappaScaled(constants, rs.value);
  const double r_nu = constants.radii.nuisance;

  const Vector finv_a = chol.Solve(a);
  const double dfa = Norm2(metric.d.Apply(finv_a));
  const double dinva = Norm2(metric.d.ApplyInverse(a));

  std::vector<PerturbedPartialResult> out;
  out.reserve(nui_values.size());
  for (const Vector& nu : nui_values) {
    PerturbedPartialResult res;
    res.nui = nu;
    res.diagnostics = diag;
    res.theta_nu = PartialOrThrow(*g, split, nu, theta_star);

    const Vector dnu = Sub(nu, nu_star);
    const double hn = NuiNorm(metric.h.Apply(dnu), metric.nui_norm);
    const double local_dltwb = e.d21 * hn;
    const Vector lead = Scale(chol.Solve(AddV(MatVec(bh.f_tn, dnu), a)), -1.0);
    const Vector shift = Sub(res.theta_nu, theta_star);

    PrerequisiteFlags fl;
    fl.dltwb = base_ok && local_dltwb <= 0.25;
    if (base_ok) {
      fl.d12r = constants.radii.target >= diag.rho2 * hn && hn <= r_nu;
      fl.dinf = diag.rho2 * e.tau3 * r_nu <= 2.0 / 3.0;
    }
    const double bound =
        base_ok ? qnorm * ((diag.delta_nano + e.d21) * hn * hn +
                           (2.0 * e.tau3 + 0.5 * e.d21) * dfa * dfa)
                : kInf;
    res.expansion = MakeReport("perturbed_partial", Norm2(MatVec(qm, lead)),
                               Norm2(MatVec(qm, Sub(shift, lead))), bound, fl);
    const double loc_bound =
        base_ok && local_dltwb < 1.0
            ? diag.rho2 * hn + 1.5 / (1.0 - local_dltwb) * dinva
            : kInf;
    res.localization = MakeReport("localization", Norm2(metric.d.Apply(lead)),
                                  Norm2(metric.d.Apply(shift)), loc_bound, fl);
    out.push_back(std::move(res));
  }
  return out;
}

SemiOrthogonalityReport SemiOrthogonalityProbe(
    const SmoothObjective& f, const BlockSplit& split,
    const std::vector<Vector>& nui_values, const MetricTensor& d,
    double zero_tol, const std::optional<Vector>& joint_minimizer) {
  Require(split.dim() == f.dim(), ErrorCode::kDimensionMismatch,
          "split does not match the objective");
  Require(d.dim() == split.p(), ErrorCode::kDimensionMismatch,
          "metric must have the target dimension");
  Require(zero_tol >= 0.0, ErrorCode::kInvalidArgument,
          "zero tolerance must be nonnegative");
  const Vector joint =
      joint_minimizer ? *joint_minimizer : SolveJointMinimizer(f);
  const Vector theta_star = split.Target(joint);
  SemiOrthogonalityReport out;
  for (const Vector& nu : nui_values) {
    Require(nu.size() == split.q(), ErrorCode::kDimensionMismatch,
            "nuisance value must have the nuisance dimension");
    const Vector point = split.Join(theta_star, nu);
    const Matrix cross =
        Block(f.Hessian(point).matrix(), split.target(), split.nuisance());
    out.max_cross = std::max(out.max_cross, cross.MaxAbs());
    const Vector theta_nu = PartialOrThrow(f, split, nu, theta_star);
    out.max_bias =
        std::max(out.max_bias, Norm2(d.Apply(Sub(theta_nu, theta_star))));
  }
  out.near_orthogonal = out.max_cross <= zero_tol;
  // The partial solves stop at a 1e-12 gradient, which bounds the bias
  // resolution.
  out.unbiased = out.max_bias <= std::max(zero_tol, 1e-9);
  return out;
}

void WriteDiagnosticsCsv(std::ostream& out, const ExpansionDiagnostics& d) {
  out << "quantity,value\n";
  const std::pair<const char*, double> rows[] = {
      {"rho_dual", d.rho_dual},
      {"rho_dual_l2", d.rho_dual_l2},
      {"rho_star", d.rho_star},
      {"rho2", d.rho2},
      {"dltwb", d.dltwb},
      {"delta_nano", d.delta_nano},
      {"delta_infty", d.delta_infty},
      {"r_infty", d.r_infty},
      {"dinv_a", d.dinv_a},
  };
  for (const auto& [name, value] : rows) {
    out << name << ',' << FormatDouble(value) << '\n';
  }
  out << "prerequisites_hold," << (d.prerequisites_hold ? 1 : 0) << '\n';
}

void WriteResidualCsv(std::ostream& out,
                      const std::vector<ResidualReport>& reports) {
  out << "variant,leading,remainder,bound,holds,flag_dltwb,flag_d12r,"
         "flag_dinf\n";
  for (const ResidualReport& r : reports) {
    out << r.variant << ',' << FormatDouble(r.leading) << ','
        << FormatDouble(r.remainder) << ',' << FormatDouble(r.bound) << ','
        << (r.holds ? 1 : 0) << ',' << (r.flags.dltwb ? 1 : 0) << ','
        << (r.flags.d12r ? 1 : 0) << ',' << (r.flags.dinf ? 1 : 0) << '\n';
  }
}

}  // namespace perturbopt
