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

#include "perturbopt/linalg.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "perturbopt/error.h"
#include "perturbopt/rng.h"
#include "perturbopt/tolerances.h"

namespace perturbopt {

Cholesky Cholesky::Factor(const SymMatrix& a) {
  const std::size_t n = a.dim();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    auto lj = l.Row(j);
    for (std::size_t k = 0; k < j; ++k) d -= lj[k] * lj[k];
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw Error(ErrorCode::kNotPositiveDefinite,
                  "nonpositive pivot " + std::to_string(d) + " at column " +
                      std::to_string(j));
    }
    const double djj = std::sqrt(d);
    lj[j] = djj;
    for (std::size_t i = j + 1; i < n; ++i) {
      auto li = l.Row(i);
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      li[j] = s / djj;
    }
  }
  return Cholesky(std::move(l));
}

Vector Cholesky::Solve(std::span<const double> b) const {
  const std::size_t n = dim();
  Require(b.size() == n, ErrorCode::kDimensionMismatch, "Cholesky::Solve");
  Vector y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    auto li = l_.Row(i);
    double s = y[i];
    for (std::size_t k = 0; k < i; ++k) s -= li[k] * y[k];
    y[i] = s / li[i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l_(k, ii) * y[k];
    y[ii] = s / l_(ii, ii);
  }
  return y;
}

Matrix Cholesky::Solve(const Matrix& b) const {
  Require(b.rows() == dim(), ErrorCode::kDimensionMismatch, "Cholesky::Solve");
  Matrix x(b.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    const Vector col = Solve(b.Column(j));
    for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = col[i];
  }
  return x;
}

SymMatrix Cholesky::Inverse() const {
  Matrix inv = Solve(Matrix::Identity(dim()));
  for (std::size_t i = 0; i < dim(); ++i)
    for (std::size_t j = i + 1; j < dim(); ++j) {
      const double avg = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = avg;
      inv(j, i) = avg;
    }
  return SymMatrix(std::move(inv));
}

Vector SpdSolve(const SymMatrix& a, std::span<const double> b) {
  return Cholesky::Factor(a).Solve(b);
}

Vector LuSolve(const Matrix& a, std::span<const double> b) {
  Require(a.square() && a.rows() == b.size(), ErrorCode::kDimensionMismatch,
          "LuSolve");
  const std::size_t n = a.rows();
  Matrix m = a;
  Vector x(b.begin(), b.end());
  const double scale = std::max(m.MaxAbs(), 1e-300);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
    if (std::abs(m(piv, k)) <= 1e-15 * scale) {
      throw Error(ErrorCode::kSingularMatrix,
                  "zero pivot at column " + std::to_string(k));
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
      std::swap(x[k], x[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = m(i, k) / m(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) m(i, j) -= f * m(k, j);
      x[i] -= f * x[k];
    }
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= m(ii, j) * x[j];
    x[ii] = s / m(ii, ii);
  }
  return x;
}

EigenDecomposition SymEig(const SymMatrix& a) {
  const std::size_t n = a.dim();
  Matrix m = a.matrix();
  Matrix v = Matrix::Identity(n);

  auto off_mass = [&]() {
    double off = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double sq = m(i, j) * m(i, j);
        total += sq;
        if (i != j) off += sq;
      }
    return std::pair{off, total};
  };

  bool converged = false;
  for (int sweep = 0; sweep < tol::kJacobiMaxSweeps; ++sweep) {
    auto [off, total] = off_mass();
    if (off <= tol::kJacobiOffDiagonal * tol::kJacobiOffDiagonal * total) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        m(p, q) = 0.0;
        m(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) {
    auto [off, total] = off_mass();
    if (off > tol::kJacobiOffDiagonal * tol::kJacobiOffDiagonal * total)
      throw Error(ErrorCode::kNoConvergence, "Jacobi sweep cap reached");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(
      order.begin(), order.end(),
      [&](std::size_t i, std::size_t j) { return m(i, i) < m(j, j); });
  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = m(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

double MinEigenvalue(const SymMatrix& a) { return SymEig(a).values.front(); }

double MaxEigenvalue(const SymMatrix& a) { return SymEig(a).values.back(); }

SymMatrix PsdPower(const SymMatrix& a, PsdExponent exponent) {
  const EigenDecomposition eig = SymEig(a);
  const std::size_t n = a.dim();
  double scale = 0.0;
  for (double l : eig.values) scale = std::max(scale, std::abs(l));
  Vector powered(n);
  for (std::size_t k = 0; k < n; ++k) {
    double l = eig.values[k];
    if (exponent == PsdExponent::kSqrt) {
      if (l < -1e-12 * scale) {
        throw Error(ErrorCode::kNotPositiveDefinite,
                    "negative eigenvalue " + std::to_string(l));
      }
      powered[k] = std::sqrt(std::max(l, 0.0));
      continue;
    }
    if (l <= tol::kEigenFloor * scale || l <= 0.0) {
      throw Error(ErrorCode::kSingularMatrix,
                  "eigenvalue " + std::to_string(l) +
                      " too small for a negative power");
    }
    powered[k] =
        exponent == PsdExponent::kInvSqrt ? 1.0 / std::sqrt(l) : 1.0 / l;
  }
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = powered[k];
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const double vik = w * eig.vectors(i, k);
      for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * eig.vectors(j, k);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (out(i, j) + out(j, i));
      out(i, j) = avg;
      out(j, i) = avg;
    }
  return SymMatrix(std::move(out));
}

double SpectralNorm(const Matrix& m, std::uint64_t seed) {
  for (double v : m.data())
    Require(std::isfinite(v), ErrorCode::kInvalidArgument,
            "SpectralNorm needs finite entries");
  if (m.rows() == 0 || m.cols() == 0 || m.MaxAbs() == 0.0) return 0.0;

  // Work with the smaller Gram matrix.
  const bool wide = m.rows() < m.cols();
  const Matrix& a = m;
  Matrix gram = wide ? MatMul(a, a.Transpose()) : MatTMul(a, a);
  const std::size_t d = gram.rows();

  auto normalize_by_trace = [&](Matrix& g) {
    double t = 0.0;
    for (std::size_t i = 0; i < d; ++i) t += g(i, i);
    if (t > 0.0)
      for (std::size_t i = 0; i < d; ++i)
        for (double& x : g.Row(i)) x /= t;
  };
  Matrix c = gram;
  normalize_by_trace(c);
  for (int s = 0; s < tol::kPowerSquarings; ++s) {
    c = MatMul(c, c);
    normalize_by_trace(c);
  }

  Rng rng(SplitMix64(seed));
  Vector v(d);
  for (double& x : v) x = rng.Uniform(0.5, 1.5) * (rng.Bernoulli(0.5) ? 1 : -1);
  double nv = Norm2(v);
  for (double& x : v) x /= nv;

  auto rayleigh = [&](const Vector& u) { return Dot(u, MatVec(gram, u)); };
  double estimate = rayleigh(v);
  const int cap = 10 * static_cast<int>(d) + 100;
  for (int it = 0; it < cap; ++it) {
    Vector w = MatVec(c, v);
    double nw = Norm2(w);
    if (nw == 0.0) {
      // Start vector orthogonal to the dominant space; restart.
      for (double& x : v) x = rng.Uniform(-1.0, 1.0);
      nv = Norm2(v);
      for (double& x : v) x /= nv;
      continue;
    }
    for (double& x : w) x /= nw;
    const double next = rayleigh(w);
    v = std::move(w);
    if (std::abs(next - estimate) <= tol::kPowerIteration * std::abs(next)) {
      return std::sqrt(std::max(next, 0.0));
    }
    estimate = next;
  }
  throw Error(ErrorCode::kNoConvergence,
              "power iteration reached its cap of " + std::to_string(cap));
}

Contraction ContractionMatrix(const BlockHessian& bh) {
  const SymMatrix tt = PsdPower(bh.f_tt, PsdExponent::kInvSqrt);
  const SymMatrix nn = PsdPower(bh.f_nn, PsdExponent::kInvSqrt);
  Contraction out;
  out.p = MatMul(MatMul(tt.matrix(), bh.f_tn), nn.matrix());
  const double s = SpectralNorm(out.p);
  out.ppt_norm = s * s;
  out.certifiable = out.ppt_norm < 1.0;
  return out;
}

double OffDiagonalRowSum(const Matrix& b) {
  double rho = 0.0;
  for (std::size_t i = 0; i < b.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < b.cols(); ++j)
      if (j != i) s += std::abs(b(i, j));
    rho = std::max(rho, s);
  }
  return rho;
}

NeumannReport NeumannSupBounds(const Matrix& b, std::span<const double> u) {
  Require(b.square() && b.rows() == u.size(), ErrorCode::kDimensionMismatch,
          "NeumannSupBounds");
  for (std::size_t i = 0; i < b.rows(); ++i)
    Require(std::abs(b(i, i) - 1.0) <= tol::kUnitDiagonal,
            ErrorCode::kInvalidArgument, "B must have a unit diagonal");
  NeumannReport r;
  r.rho = OffDiagonalRowSum(b);
  if (r.rho >= 1.0) {
    throw Error(ErrorCode::kRhoNotLessThanOne,
                "rho = " + std::to_string(r.rho));
  }
  const Vector x = LuSolve(b, u);
  const Vector bu = MatVec(b, u);
  const double un = NormInf(u);
  Vector second(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    second[i] = x[i] - 2.0 * u[i] + bu[i];
  r.lhs = {NormInf(x), NormInf(Sub(x, u)), NormInf(second)};
  const double inv = 1.0 / (1.0 - r.rho);
  r.rhs = {un * inv, r.rho * un * inv, r.rho * r.rho * un * inv};
  for (int k = 0; k < 3; ++k) {
    r.slack[k] = r.rhs[k] - r.lhs[k];
    // Equality is attained on some inputs; allow for the rounding of the
    // solve itself.
    r.holds[k] = r.lhs[k] <= r.rhs[k] + 1e-13 * (un * inv);
  }
  return r;
}

}  // namespace perturbopt
