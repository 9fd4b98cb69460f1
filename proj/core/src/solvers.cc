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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "perturbopt/error.h"
#include "perturbopt/linalg.h"
#include "perturbopt/objective.h"

namespace perturbopt {
namespace {

void Record(SolveReport& r, bool enabled, std::span<const double> x,
            double value) {
  if (!enabled) return;
  r.trajectory.emplace_back(x.begin(), x.end());
  r.values.push_back(value);
}

void Finish(SolveReport& r, SolveStatus status, double grad) {
  r.status = status;
  r.converged = status == SolveStatus::kConverged;
  r.final_grad_supnorm = grad;
}

// Minimizes the convex 1-D function s -> f(x with x_i = s) by bracketing the
// root of its derivative and running Newton steps safeguarded by bisection.
// Returns false when no sign change is found.
bool MinimizeCoordinate(const SmoothObjective& f, Vector& x, std::size_t i,
                        double tol) {
  const double x0 = x[i];
  auto deriv = [&](double s) {
    x[i] = s;
    return f.Partial(x, i);
  };
  const double d0 = deriv(x0);
  if (std::abs(d0) <= tol) {
    x[i] = x0;
    return true;
  }
  double lo = x0, hi = x0;
  double width = (1.0 + std::abs(x0)) * tol::kBracketScale;
  bool bracketed = false;
  for (int k = 0; k < tol::kMaxBracketDoublings; ++k) {
    if (d0 < 0) {
      hi = x0 + width;
      if (deriv(hi) >= 0) {
        bracketed = true;
        break;
      }
      lo = hi;
    } else {
      lo = x0 - width;
      if (deriv(lo) <= 0) {
        bracketed = true;
        break;
      }
      hi = lo;
    }
    width *= 2.0;
  }
  if (!bracketed) {
    x[i] = x0;
    return false;
  }
  double s = x0;
  for (int it = 0; it < 200; ++it) {
    const double d = deriv(s);
    if (std::abs(d) <= tol) break;
    if (d < 0) {
      lo = s;
    } else {
      hi = s;
    }
    const double curv = f.Partial2(x, i);
    double next = curv > 0 ? s - d / curv : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <=
        4 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(s))) {
      break;
    }
    s = next;
  }
  x[i] = s;
  return true;
}

}  // namespace

bool SolveSucceeded(const SolveReport& r, double tol) {
  return r.converged || (r.status == SolveStatus::kStalled &&
                         r.final_grad_supnorm <= 100 * tol);
}

SolveReport NewtonMinimize(const SmoothObjective& f, std::span<const double> x0,
                           const NewtonOptions& options) {
  Require(x0.size() == f.dim(), ErrorCode::kDimensionMismatch,
          "NewtonMinimize start point");
  Require(options.tol > 0, ErrorCode::kInvalidArgument, "tol must be positive");
  SolveReport r;
  Vector x(x0.begin(), x0.end());
  double fx = f.Value(x);
  Vector g = f.Gradient(x);
  Record(r, options.record_trajectory, x, fx);
  for (int it = 0; it < options.max_iter; ++it) {
    const double gn = NormInf(g);
    if (gn <= options.tol) {
      r.argmin = std::move(x);
      Finish(r, SolveStatus::kConverged, gn);
      return r;
    }
    Vector step;
    try {
      step = Cholesky::Factor(f.Hessian(x)).Solve(g);
    } catch (const Error& e) {
      throw Error(
          ErrorCode::kHessianNotPD,
          "at Newton iteration " + std::to_string(it) + ": " + e.what());
    }
    for (double& s : step) s = -s;
    const double slope = Dot(g, step);
    // Changes of f below this level are rounding noise; there the Armijo
    // test is replaced by a decrease of the gradient.
    const double noise =
        64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fx));
    double t = 1.0;
    bool accepted = false;
    Vector xn;
    Vector gn_vec;
    double fn = 0;
    for (int k = 0; k <= tol::kMaxHalvings; ++k) {
      xn = Axpy(x, t, step);
      fn = f.Value(xn);
      if (std::isfinite(fn) && fn <= fx + tol::kArmijo * t * slope &&
          fn < fx - noise) {
        gn_vec = f.Gradient(xn);
        accepted = true;
        break;
      }
      if (std::isfinite(fn) && fn <= fx + noise) {
        gn_vec = f.Gradient(xn);
        if (NormInf(gn_vec) < gn) {
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) {
      r.argmin = std::move(x);
      r.iterations = it;
      Finish(r, SolveStatus::kStalled, gn);
      return r;
    }
    x = std::move(xn);
    fx = fn;
    g = std::move(gn_vec);
    r.iterations = it + 1;
    Record(r, options.record_trajectory, x, fx);
  }
  const double gn = NormInf(g);
  r.argmin = std::move(x);
  Finish(
      r,
      gn <= options.tol ? SolveStatus::kConverged : SolveStatus::kMaxIterations,
      gn);
  return r;
}

SolveReport CoordinateDescentMinimize(const SmoothObjective& f,
                                      std::span<const double> x0,
                                      const CoordinateOptions& options) {
  Require(x0.size() == f.dim(), ErrorCode::kDimensionMismatch,
          "CoordinateDescentMinimize start point");
  Require(options.tol > 0, ErrorCode::kInvalidArgument, "tol must be positive");
  SolveReport r;
  Vector x(x0.begin(), x0.end());
  double fx = f.Value(x);
  Record(r, options.record_trajectory, x, fx);
  const double inner_tol = 0.1 * options.tol;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double gn = NormInf(f.Gradient(x));
    if (gn <= options.tol) {
      r.argmin = std::move(x);
      r.iterations = sweep;
      Finish(r, SolveStatus::kConverged, gn);
      return r;
    }
    bool moved = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double old = x[i];
      if (!MinimizeCoordinate(f, x, i, inner_tol)) {
        r.argmin = std::move(x);
        r.iterations = sweep;
        Finish(r, SolveStatus::kNoMinimizer, gn);
        return r;
      }
      const double fn = f.Value(x);
      // An exact coordinate minimum cannot raise f; changes below the
      // rounding level of f carry no information and are kept.
      const double noise =
          64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fx));
      if (fn > fx + noise) {
        x[i] = old;
      } else {
        moved = moved || x[i] != old;
        fx = fn;
      }
      Record(r, options.record_trajectory, x, fx);
    }
    r.iterations = sweep + 1;
    if (!moved) {
      gn = NormInf(f.Gradient(x));
      r.argmin = std::move(x);
      Finish(
          r,
          gn <= options.tol ? SolveStatus::kConverged : SolveStatus::kStalled,
          gn);
      return r;
    }
  }
  const double gn = NormInf(f.Gradient(x));
  r.argmin = std::move(x);
  Finish(
      r,
      gn <= options.tol ? SolveStatus::kConverged : SolveStatus::kMaxIterations,
      gn);
  return r;
}

SolveReport PartialMinimize(const SmoothObjective& f, const BlockSplit& split,
                            FixedBlock fixed,
                            std::span<const double> fixed_value,
                            std::span<const double> warm_start, double tol) {
  Require(split.dim() == f.dim(), ErrorCode::kDimensionMismatch,
          "PartialMinimize split");
  const bool target_fixed = fixed == FixedBlock::kTarget;
  const auto& fixed_idx = target_fixed ? split.target() : split.nuisance();
  const auto& free_idx = target_fixed ? split.nuisance() : split.target();
  Require(fixed_value.size() == fixed_idx.size() &&
              warm_start.size() == free_idx.size(),
          ErrorCode::kDimensionMismatch, "PartialMinimize block sizes");
  Vector point(f.dim());
  for (std::size_t i = 0; i < fixed_idx.size(); ++i)
    point[fixed_idx[i]] = fixed_value[i];
  for (std::size_t i = 0; i < free_idx.size(); ++i)
    point[free_idx[i]] = warm_start[i];
  BlockRestriction restricted(f, free_idx, std::move(point));
  NewtonOptions options;
  options.tol = tol;
  return NewtonMinimize(restricted, warm_start, options);
}

}  // namespace perturbopt
