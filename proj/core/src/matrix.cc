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

#include "perturbopt/matrix.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "perturbopt/error.h"
#include "perturbopt/linalg.h"
#include "perturbopt/tolerances.h"

namespace perturbopt {

Matrix Matrix::Identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::Diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::FromRows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    Require(row.size() == c, ErrorCode::kDimensionMismatch,
            "ragged rows in Matrix::FromRows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Vector Matrix::Column(std::size_t j) const {
  Vector out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

Matrix Matrix::Transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::NormInf() const {
  double best = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (double v : Row(i)) s += std::abs(v);
    best = std::max(best, s);
  }
  return best;
}

double Matrix::MaxAbs() const {
  double best = 0.0;
  for (double v : data_) best = std::max(best, std::abs(v));
  return best;
}

Matrix MatMul(const Matrix& a, const Matrix& b) {
  Require(a.cols() == b.rows(), ErrorCode::kDimensionMismatch, "MatMul");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.Row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.Row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix MatTMul(const Matrix& a, const Matrix& b) {
  Require(a.rows() == b.rows(), ErrorCode::kDimensionMismatch, "MatTMul");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto ak = a.Row(k);
    auto bk = b.Row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      auto ci = c.Row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

Vector MatVec(const Matrix& a, std::span<const double> x) {
  Require(a.cols() == x.size(), ErrorCode::kDimensionMismatch, "MatVec");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = Dot(a.Row(i), x);
  return y;
}

Vector MatTVec(const Matrix& a, std::span<const double> x) {
  Require(a.rows() == x.size(), ErrorCode::kDimensionMismatch, "MatTVec");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    auto ai = a.Row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += ai[j] * xi;
  }
  return y;
}

Matrix Combine(double alpha, const Matrix& a, double beta, const Matrix& b) {
  Require(a.rows() == b.rows() && a.cols() == b.cols(),
          ErrorCode::kDimensionMismatch, "Combine");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      c(i, j) = alpha * a(i, j) + beta * b(i, j);
  return c;
}

SymMatrix::SymMatrix(Matrix m) {
  Require(m.square(), ErrorCode::kDimensionMismatch,
          "SymMatrix needs a square matrix");
  Require(m.rows() >= 1, ErrorCode::kInvalidArgument,
          "SymMatrix dimension must be at least 1");
  const double scale = std::max(1.0, m.MaxAbs());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double d = std::abs(m(i, j) - m(j, i));
      Require(d <= tol::kSymmetry * scale, ErrorCode::kNotSymmetric,
              "entry (" + std::to_string(i) + "," + std::to_string(j) +
                  ") asymmetric by " + std::to_string(d));
      const double avg = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = avg;
      m(j, i) = avg;
    }
  }
  m_ = std::move(m);
}

Vector SymMatrix::Diag() const {
  Vector d(dim());
  for (std::size_t i = 0; i < dim(); ++i) d[i] = m_(i, i);
  return d;
}

double SymMatrix::Trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) t += m_(i, i);
  return t;
}

SymMatrix Scaled(const SymMatrix& a, double c) {
  SymMatrix out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = i; j < a.dim(); ++j) out.Set(i, j, c * a(i, j));
  return out;
}

Vector MatVec(const SymMatrix& a, std::span<const double> x) {
  return MatVec(a.matrix(), x);
}

double Bilinear(const SymMatrix& a, std::span<const double> x,
                std::span<const double> y) {
  return Dot(x, MatVec(a, y));
}

SymMatrix Submatrix(const SymMatrix& a, std::span<const std::size_t> idx) {
  SymMatrix out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i; j < idx.size(); ++j)
      out.Set(i, j, a(idx[i], idx[j]));
  return out;
}

Matrix Block(const Matrix& a, std::span<const std::size_t> rows,
             std::span<const std::size_t> cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(i, j) = a(rows[i], cols[j]);
  return out;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  Require(a.size() == b.size(), ErrorCode::kDimensionMismatch, "Dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Norm2(std::span<const double> a) {
  // Scaled to avoid overflow on extreme entries.
  const double m = NormInf(a);
  if (m == 0.0 || !std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : a) s += (v / m) * (v / m);
  return m * std::sqrt(s);
}

double NormInf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

Vector Sub(std::span<const double> a, std::span<const double> b) {
  Require(a.size() == b.size(), ErrorCode::kDimensionMismatch, "Sub");
  Vector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
  return c;
}

Vector AddV(std::span<const double> a, std::span<const double> b) {
  Require(a.size() == b.size(), ErrorCode::kDimensionMismatch, "AddV");
  Vector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

Vector Scale(std::span<const double> a, double c) {
  Vector out(a.begin(), a.end());
  for (double& v : out) v *= c;
  return out;
}

Vector Axpy(std::span<const double> a, double c, std::span<const double> b) {
  Require(a.size() == b.size(), ErrorCode::kDimensionMismatch, "Axpy");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + c * b[i];
  return out;
}

Vector Hadamard(std::span<const double> a, std::span<const double> b) {
  Require(a.size() == b.size(), ErrorCode::kDimensionMismatch, "Hadamard");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

BlockSplit::BlockSplit(std::vector<std::size_t> target,
                       std::vector<std::size_t> nuisance)
    : target_(std::move(target)), nuisance_(std::move(nuisance)) {
  Require(!target_.empty() && !nuisance_.empty(), ErrorCode::kInvalidArgument,
          "both blocks of a split must be nonempty");
  const std::size_t n = dim();
  std::vector<int> seen(n, 0);
  for (std::size_t i : target_) {
    Require(i < n, ErrorCode::kInvalidArgument, "split index out of range");
    ++seen[i];
  }
  for (std::size_t i : nuisance_) {
    Require(i < n, ErrorCode::kInvalidArgument, "split index out of range");
    ++seen[i];
  }
  for (int c : seen)
    Require(c == 1, ErrorCode::kInvalidArgument,
            "split blocks must be disjoint and cover every coordinate");
}

BlockSplit BlockSplit::Halves(std::size_t n) {
  Require(n >= 2, ErrorCode::kInvalidArgument, "Halves needs n >= 2");
  std::vector<std::size_t> t(n / 2), u(n - n / 2);
  std::iota(t.begin(), t.end(), std::size_t{0});
  std::iota(u.begin(), u.end(), n / 2);
  return BlockSplit(std::move(t), std::move(u));
}

Vector BlockSplit::Target(std::span<const double> x) const {
  Require(x.size() == dim(), ErrorCode::kDimensionMismatch, "Target");
  return Gather(x, target_);
}

Vector BlockSplit::Nuisance(std::span<const double> x) const {
  Require(x.size() == dim(), ErrorCode::kDimensionMismatch, "Nuisance");
  return Gather(x, nuisance_);
}

Vector BlockSplit::Join(std::span<const double> theta,
                        std::span<const double> nu) const {
  Require(theta.size() == p() && nu.size() == q(),
          ErrorCode::kDimensionMismatch, "Join");
  Vector x(dim());
  for (std::size_t i = 0; i < p(); ++i) x[target_[i]] = theta[i];
  for (std::size_t i = 0; i < q(); ++i) x[nuisance_[i]] = nu[i];
  return x;
}

Vector Gather(std::span<const double> x, std::span<const std::size_t> idx) {
  Vector out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = x[idx[i]];
  return out;
}

BlockHessian BlockHessian::From(const SymMatrix& f, const BlockSplit& split) {
  Require(f.dim() == split.dim(), ErrorCode::kDimensionMismatch,
          "BlockHessian::From");
  return BlockHessian{Submatrix(f, split.target()),
                      Block(f.matrix(), split.target(), split.nuisance()),
                      Submatrix(f, split.nuisance())};
}

MetricTensor MetricTensor::Diagonal(Vector d) {
  for (double v : d)
    Require(v > 0.0 && std::isfinite(v), ErrorCode::kInvalidArgument,
            "diagonal metric entries must be positive");
  MetricTensor m;
  m.kind_ = Kind::kDiagonal;
  m.diag_ = std::move(d);
  return m;
}

MetricTensor MetricTensor::Full(SymMatrix d) {
  Cholesky::Factor(d);  // throws unless positive definite
  MetricTensor m;
  m.kind_ = Kind::kFull;
  m.full_ = std::move(d);
  return m;
}

MetricTensor MetricTensor::Identity(std::size_t n) {
  return Diagonal(Vector(n, 1.0));
}

MetricTensor MetricTensor::SqrtDiagonalOf(const SymMatrix& a) {
  Vector d = a.Diag();
  for (double& v : d) {
    Require(v > 0.0, ErrorCode::kInvalidArgument,
            "metric needs a positive diagonal");
    v = std::sqrt(v);
  }
  return Diagonal(std::move(d));
}

std::size_t MetricTensor::dim() const {
  return is_diagonal() ? diag_.size() : full_.dim();
}

Vector MetricTensor::Apply(std::span<const double> x) const {
  Require(x.size() == dim(), ErrorCode::kDimensionMismatch, "metric Apply");
  if (is_diagonal()) return Hadamard(diag_, x);
  return MatVec(full_, x);
}

Vector MetricTensor::ApplyInverse(std::span<const double> x) const {
  Require(x.size() == dim(), ErrorCode::kDimensionMismatch,
          "metric ApplyInverse");
  if (is_diagonal()) {
    Vector out(x.begin(), x.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= diag_[i];
    return out;
  }
  return SpdSolve(full_, x);
}

Matrix MetricTensor::AsMatrix() const {
  return is_diagonal() ? Matrix::Diagonal(diag_) : full_.matrix();
}

SymMatrix MetricTensor::Squared() const {
  if (is_diagonal()) return SymMatrix::Diagonal(Hadamard(diag_, diag_));
  return SymMatrix(MatMul(full_.matrix(), full_.matrix()));
}

Matrix MetricTensor::InverseMatrix() const {
  if (is_diagonal()) {
    Vector inv(diag_.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / diag_[i];
    return Matrix::Diagonal(inv);
  }
  return Cholesky::Factor(full_).Inverse().matrix();
}

}  // namespace perturbopt
