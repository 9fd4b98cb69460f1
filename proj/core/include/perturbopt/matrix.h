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

// Dense matrices, symmetric matrices, block splits and metric tensors.

#ifndef PERTURBOPT_MATRIX_H_
#define PERTURBOPT_MATRIX_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace perturbopt {

using Vector = std::vector<double>;

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix Identity(std::size_t n);
  static Matrix Diagonal(std::span<const double> d);
  static Matrix FromRows(
      std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<const double> Row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> Row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }
  Vector Column(std::size_t j) const;
  const std::vector<double>& data() const { return data_; }

  Matrix Transpose() const;
  // max_i sum_j |a_ij|
  double NormInf() const;
  double MaxAbs() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix MatMul(const Matrix& a, const Matrix& b);
// a^T b without forming the transpose.
Matrix MatTMul(const Matrix& a, const Matrix& b);
Vector MatVec(const Matrix& a, std::span<const double> x);
Vector MatTVec(const Matrix& a, std::span<const double> x);
// alpha * a + beta * b
Matrix Combine(double alpha, const Matrix& a, double beta, const Matrix& b);

// Symmetric matrix. Construction from a general matrix checks symmetry to
// a relative tolerance and stores the exact symmetrization.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n) : m_(n, n) {}
  explicit SymMatrix(Matrix m);

  static SymMatrix Identity(std::size_t n) {
    return SymMatrix(Matrix::Identity(n));
  }
  static SymMatrix Diagonal(std::span<const double> d) {
    return SymMatrix(Matrix::Diagonal(d));
  }

  std::size_t dim() const { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  // Writes both (i, j) and (j, i).
  void Set(std::size_t i, std::size_t j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }
  void Add(std::size_t i, std::size_t j, double v) {
    m_(i, j) += v;
    if (i != j) m_(j, i) += v;
  }
  const Matrix& matrix() const { return m_; }
  Vector Diag() const;
  double Trace() const;

 private:
  Matrix m_;
};

SymMatrix Scaled(const SymMatrix& a, double c);
Vector MatVec(const SymMatrix& a, std::span<const double> x);
// x^T A y
double Bilinear(const SymMatrix& a, std::span<const double> x,
                std::span<const double> y);
// Principal submatrix on `idx`.
SymMatrix Submatrix(const SymMatrix& a, std::span<const std::size_t> idx);
// Rectangular block a[rows, cols].
Matrix Block(const Matrix& a, std::span<const std::size_t> rows,
             std::span<const std::size_t> cols);

// Vector helpers.
double Dot(std::span<const double> a, std::span<const double> b);
double Norm2(std::span<const double> a);
double NormInf(std::span<const double> a);
Vector Sub(std::span<const double> a, std::span<const double> b);
Vector AddV(std::span<const double> a, std::span<const double> b);
Vector Scale(std::span<const double> a, double c);
// a + c * b
Vector Axpy(std::span<const double> a, double c, std::span<const double> b);
Vector Hadamard(std::span<const double> a, std::span<const double> b);

// Partition of {0..dim-1} into an ordered target block and an ordered
// nuisance block.
class BlockSplit {
 public:
  BlockSplit(std::vector<std::size_t> target,
             std::vector<std::size_t> nuisance);

  // First floor(n/2) coordinates as target.
  static BlockSplit Halves(std::size_t n);

  const std::vector<std::size_t>& target() const { return target_; }
  const std::vector<std::size_t>& nuisance() const { return nuisance_; }
  std::size_t p() const { return target_.size(); }
  std::size_t q() const { return nuisance_.size(); }
  std::size_t dim() const { return target_.size() + nuisance_.size(); }

  Vector Target(std::span<const double> x) const;
  Vector Nuisance(std::span<const double> x) const;
  Vector Join(std::span<const double> theta, std::span<const double> nu) const;

 private:
  std::vector<std::size_t> target_;
  std::vector<std::size_t> nuisance_;
};

Vector Gather(std::span<const double> x, std::span<const std::size_t> idx);

struct BlockHessian {
  SymMatrix f_tt;
  Matrix f_tn;
  SymMatrix f_nn;

  static BlockHessian From(const SymMatrix& f, const BlockSplit& split);
};

// Diagonal or full positive definite scaling D.
class MetricTensor {
 public:
  enum class Kind { kDiagonal, kFull };

  static MetricTensor Diagonal(Vector d);
  static MetricTensor Full(SymMatrix d);
  static MetricTensor Identity(std::size_t n);
  // D_j = sqrt(A_jj).
  static MetricTensor SqrtDiagonalOf(const SymMatrix& a);

  Kind kind() const { return kind_; }
  bool is_diagonal() const { return kind_ == Kind::kDiagonal; }
  std::size_t dim() const;
  const Vector& diagonal() const { return diag_; }
  const SymMatrix& full() const { return full_; }

  Vector Apply(std::span<const double> x) const;
  Vector ApplyInverse(std::span<const double> x) const;
  // D as a dense matrix, and D^2.
  Matrix AsMatrix() const;
  SymMatrix Squared() const;
  Matrix InverseMatrix() const;

 private:
  MetricTensor() = default;
  Kind kind_ = Kind::kDiagonal;
  Vector diag_;
  SymMatrix full_;
};

}  // namespace perturbopt

#endif  // PERTURBOPT_MATRIX_H_
