#pragma once

/// \file kryest/linalg.hpp
/// \brief BLAS-1 style kernels over spans and a small dense LU used on
/// Hessenberg blocks.
///
/// The kernels are templated on the scalar so that an instrumented scalar
/// can count the arithmetic of the estimators built on top of them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "kryest/error.hpp"

namespace kryest {

using Vector = std::vector<double>;

template <class Real>
Real dot(std::span<const Real> x, std::span<const Real> y) {
  Real s{0};
  for (std::size_t i = 0; i < x.size(); ++i) s = s + x[i] * y[i];
  return s;
}

inline double dot(const Vector& x, const Vector& y) {
  return dot<double>(std::span<const double>(x), std::span<const double>(y));
}

template <class Real>
Real norm2_sq(std::span<const Real> x) {
  return dot<Real>(x, x);
}

inline double nrm2(const Vector& x) {
  // scaled accumulation to avoid overflow on huge residuals
  double scale = 0.0, ssq = 1.0;
  for (double v : x) {
    if (v != 0.0) {
      const double a = std::abs(v);
      if (scale < a) {
        ssq = 1.0 + ssq * (scale / a) * (scale / a);
        scale = a;
      } else {
        ssq += (a / scale) * (a / scale);
      }
    }
  }
  return scale * std::sqrt(ssq);
}

/// y += a*x
template <class Real>
void axpy(Real a, std::span<const Real> x, std::span<Real> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = y[i] + a * x[i];
}

inline void axpy(double a, const Vector& x, Vector& y) {
  axpy<double>(a, std::span<const double>(x), std::span<double>(y));
}

inline Vector sub(const Vector& x, const Vector& y) {
  Vector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - y[i];
  return z;
}

inline void scale(double a, Vector& x) {
  for (double& v : x) v *= a;
}

inline bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

/// Column-major square matrix with an in-place partial-pivot LU.
///
/// Sized for Krylov projections (k up to a few hundred); not a general
/// dense-matrix class.
class SmallLu {
 public:
  SmallLu() = default;

  /// Factor the leading `k` x `k` block of a column-major matrix with leading
  /// dimension `ld`. Pivots below `rel_tol * max|a_ij|` mark the block singular.
  /// With `hessenberg` set the block is taken to be upper Hessenberg and the
  /// factorization costs O(k^2).
  SmallLu(std::span<const double> a, std::size_t ld, std::size_t k, double rel_tol = 1e-14,
          bool hessenberg = false)
      : n_(k), lu_(k * k), piv_(k) {
    double amax = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < k; ++i) {
        lu_[i + j * k] = a[i + j * ld];
        amax = std::max(amax, std::abs(lu_[i + j * k]));
      }
    const double tiny = rel_tol * amax;
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t p = c;
      double best = std::abs(lu_[c + c * k]);
      const std::size_t last = hessenberg ? std::min(c + 2, k) : k;
      for (std::size_t i = c + 1; i < last; ++i)
        if (std::abs(lu_[i + c * k]) > best) {
          best = std::abs(lu_[i + c * k]);
          p = i;
        }
      piv_[c] = p;
      if (best <= tiny || !(best == best)) {
        singular_ = true;
        return;
      }
      if (p != c)
        for (std::size_t j = 0; j < k; ++j) std::swap(lu_[c + j * k], lu_[p + j * k]);
      const double d = lu_[c + c * k];
      for (std::size_t i = c + 1; i < last; ++i) {
        const double l = lu_[i + c * k] / d;
        lu_[i + c * k] = l;
        if (l != 0.0)
          for (std::size_t j = c + 1; j < k; ++j) lu_[i + j * k] -= l * lu_[c + j * k];
      }
    }
  }

  bool singular() const noexcept { return singular_; }
  std::size_t size() const noexcept { return n_; }

  /// Solve A x = b in place.
  void solve(std::span<double> b) const {
    require();
    for (std::size_t c = 0; c < n_; ++c) std::swap(b[c], b[piv_[c]]);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < i; ++j) b[i] -= lu_[i + j * n_] * b[j];
    for (std::size_t i = n_; i-- > 0;) {
      for (std::size_t j = i + 1; j < n_; ++j) b[i] -= lu_[i + j * n_] * b[j];
      b[i] /= lu_[i + i * n_];
    }
  }

  /// Solve A^T x = b in place.
  void solve_transpose(std::span<double> b) const {
    require();
    // U^T y = b
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < i; ++j) b[i] -= lu_[j + i * n_] * b[j];
      b[i] /= lu_[i + i * n_];
    }
    // L^T z = y
    for (std::size_t i = n_; i-- > 0;)
      for (std::size_t j = i + 1; j < n_; ++j) b[i] -= lu_[j + i * n_] * b[j];
    for (std::size_t c = n_; c-- > 0;) std::swap(b[c], b[piv_[c]]);
  }

  Vector solve_copy(Vector b) const {
    solve(b);
    return b;
  }

 private:
  void require() const {
    if (singular_) throw SingularMatrix("SmallLu: singular block");
  }

  std::size_t n_ = 0;
  std::vector<double> lu_;
  std::vector<std::size_t> piv_;
  bool singular_ = false;
};

}  // namespace kryest
