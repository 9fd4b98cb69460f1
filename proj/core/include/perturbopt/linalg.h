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

#ifndef PERTURBOPT_LINALG_H_
#define PERTURBOPT_LINALG_H_

#include <array>
#include <cstdint>
#include <span>

#include "perturbopt/matrix.h"

namespace perturbopt {

// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
class Cholesky {
 public:
  // Throws kNotPositiveDefinite on a nonpositive pivot.
  static Cholesky Factor(const SymMatrix& a);

  std::size_t dim() const { return l_.rows(); }
  Vector Solve(std::span<const double> b) const;
  // Solves column by column.
  Matrix Solve(const Matrix& b) const;
  SymMatrix Inverse() const;
  const Matrix& lower() const { return l_; }

 private:
  explicit Cholesky(Matrix l) : l_(std::move(l)) {}
  Matrix l_;
};

Vector SpdSolve(const SymMatrix& a, std::span<const double> b);

// Gaussian elimination with partial pivoting for general square systems.
Vector LuSolve(const Matrix& a, std::span<const double> b);

struct EigenDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // column k pairs with values[k]
};

// Cyclic Jacobi rotations.
EigenDecomposition SymEig(const SymMatrix& a);
double MinEigenvalue(const SymMatrix& a);
double MaxEigenvalue(const SymMatrix& a);

enum class PsdExponent { kSqrt, kInvSqrt, kInverse };

SymMatrix PsdPower(const SymMatrix& a, PsdExponent exponent);

// Largest singular value by power iteration on M^T M. The Gram matrix is
// squared a few times first so that near-degenerate spectra still converge
// within the iteration cap.
double SpectralNorm(const Matrix& m, std::uint64_t seed = 0);

struct Contraction {
  Matrix p;                 // F_tt^{-1/2} F_tn F_nn^{-1/2}
  double ppt_norm = 0;      // ||P P^T|| = sigma_max(P)^2
  bool certifiable = true;  // ppt_norm < 1
};

Contraction ContractionMatrix(const BlockHessian& bh);

struct NeumannReport {
  double rho = 0;
  // Index 0: B^{-1}u, 1: (B^{-1} - I)u, 2: (B^{-1} - 2I + B)u.
  std::array<double, 3> lhs{};
  std::array<double, 3> rhs{};
  std::array<double, 3> slack{};
  std::array<bool, 3> holds{};

  bool AllHold() const { return holds[0] && holds[1] && holds[2]; }
};

// max_i sum_{j != i} |b_ij|
double OffDiagonalRowSum(const Matrix& b);

// Checks the three sup-norm bounds for B = I - Delta on the vector u.
// Requires a unit diagonal and rho < 1 (kRhoNotLessThanOne otherwise).
NeumannReport NeumannSupBounds(const Matrix& b, std::span<const double> u);

}  // namespace perturbopt

#endif  // PERTURBOPT_LINALG_H_
