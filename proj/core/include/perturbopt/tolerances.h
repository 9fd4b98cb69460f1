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

// Numerical tolerances and iteration caps used across the library.

#ifndef PERTURBOPT_TOLERANCES_H_
#define PERTURBOPT_TOLERANCES_H_

namespace perturbopt::tol {

// Relative asymmetry accepted when constructing a SymMatrix.
inline constexpr double kSymmetry = 1e-12;

// Cyclic Jacobi: stop when the off-diagonal Frobenius mass falls below this
// fraction of the total.
inline constexpr double kJacobiOffDiagonal = 1e-15;
inline constexpr int kJacobiMaxSweeps = 100;

// Eigenvalues below kEigenFloor * max|lambda| are treated as zero.
inline constexpr double kEigenFloor = 1e-14;

// Power iteration for the largest singular value.
inline constexpr double kPowerIteration = 1e-10;
inline constexpr int kPowerSquarings = 3;

// Smooth solvers.
inline constexpr double kSolverGradient = 1e-10;
inline constexpr double kJointSolve = 1e-12;
inline constexpr int kNewtonMaxIter = 200;
inline constexpr int kCoordinateMaxSweeps = 10000;
inline constexpr double kArmijo = 1e-4;
inline constexpr int kMaxHalvings = 60;
inline constexpr double kBracketScale = 64.0;
inline constexpr int kMaxBracketDoublings = 60;

// Finite differences: h = kFiniteDiffStep * (1 + |x|_inf).
inline constexpr double kFiniteDiffStep = 1e-5;
inline constexpr int kFiniteDiffDirections = 3;

// Condition constants.
inline constexpr double kGridResolution = 1e-3;
inline constexpr int kMonteCarloDirections = 256;
inline constexpr int kSignVectorMaxDim = 20;

// Residual reports: the measured remainder carries the error of 1e-12
// gradient solves, so a bound counts as met within this multiple of
// max(1, leading term).
inline constexpr double kResidualSlack = 1e-10;

// Unit-diagonal check in the Neumann bounds.
inline constexpr double kUnitDiagonal = 1e-12;

}  // namespace perturbopt::tol

#endif  // PERTURBOPT_TOLERANCES_H_
