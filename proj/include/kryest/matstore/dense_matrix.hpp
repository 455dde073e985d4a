#pragma once

/// \file kryest/matstore/dense_matrix.hpp
/// \brief Row-major dense matrix.

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kryest/error.hpp"
#include "kryest/linalg.hpp"

namespace kryest {

class DenseMatrix {
 public:
  using EigenRowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  DenseMatrix() = default;

  /// Zero matrix.
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0) throw DomainError("DenseMatrix: dimensions must be >= 1");
  }

  /// Row-major entries; all must be finite.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), a_(std::move(entries)) {
    if (rows == 0 || cols == 0) throw DomainError("DenseMatrix: dimensions must be >= 1");
    if (a_.size() != rows * cols) throw DomainError("DenseMatrix: entry count != rows*cols");
    if (!all_finite(a_)) throw DomainError("DenseMatrix: non-finite entry");
  }

  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    if (rows_ == 0 || cols_ == 0) throw DomainError("DenseMatrix: dimensions must be >= 1");
    a_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DomainError("DenseMatrix: ragged initializer");
      a_.insert(a_.end(), r.begin(), r.end());
    }
    if (!all_finite(a_)) throw DomainError("DenseMatrix: non-finite entry");
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix diagonal(std::span<const double> d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  static DenseMatrix from_eigen(const Eigen::MatrixXd& m) {
    DenseMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    out.eigen() = m;
    if (!all_finite(out.a_)) throw DomainError("DenseMatrix: non-finite entry");
    return out;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  std::span<const double> entries() const noexcept { return a_; }
  std::span<const double> row(std::size_t i) const { return {a_.data() + i * cols_, cols_}; }

  Eigen::Map<EigenRowMajor> eigen() {
    return {a_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
  }
  Eigen::Map<const EigenRowMajor> eigen() const {
    return {a_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
  }

  /// y = A x
  void apply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* r = a_.data() + i * cols_;
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += r[j] * x[j];
      y[i] = s;
    }
  }

  Vector apply(const Vector& x) const {
    Vector y(rows_);
    apply(x, y);
    return y;
  }

  /// y = A^T x
  void apply_transpose(std::span<const double> x, std::span<double> y) const {
    for (std::size_t j = 0; j < cols_; ++j) y[j] = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* r = a_.data() + i * cols_;
      const double xi = x[i];
      for (std::size_t j = 0; j < cols_; ++j) y[j] += r[j] * xi;
    }
  }

  Vector apply_transpose(const Vector& x) const {
    Vector y(cols_);
    apply_transpose(x, y);
    return y;
  }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double frobenius_norm() const { return eigen().norm(); }

  /// ||A - A^T||_F
  double asymmetry() const {
    if (!square()) throw DomainError("asymmetry: matrix not square");
    double s = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j) {
        const double d = (*this)(i, j) - (*this)(j, i);
        s += 2.0 * d * d;
      }
    return std::sqrt(s);
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> a_;
};

}  // namespace kryest
