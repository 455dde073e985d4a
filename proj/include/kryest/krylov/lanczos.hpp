#pragma once

/// \file kryest/krylov/lanczos.hpp
/// \brief Symmetric Lanczos tridiagonalization and the tridiagonal matrices
/// implied by CG and Bi-CG coefficients.

#include <cmath>
#include <span>
#include <vector>

#include "kryest/error.hpp"
#include "kryest/linalg.hpp"
#include "kryest/matstore/dense_matrix.hpp"

namespace kryest {

/// Lanczos coefficients: omega[i] is the diagonal entry (i+1, i+1) of T and
/// eta[i] the off-diagonal entry (i+1, i+2).
struct LanczosResult {
  std::vector<double> omega;
  std::vector<double> eta;
  std::vector<Vector> v;   ///< v_1 .. v_{k+1} (v_{k+1} absent on invariant-subspace exit)
  bool invariant = false;  ///< some eta_k vanished

  std::size_t steps() const noexcept { return omega.size(); }
};

/// Run `steps` Lanczos steps on symmetric A from v. Stops early, without
/// error, when eta_k <= 1e-14 ||A v_k|| (invariant subspace found).
inline LanczosResult lanczos_run(const DenseMatrix& a, const Vector& v, std::size_t steps) {
  if (!a.square()) throw DomainError("lanczos_run: matrix not square");
  const double fro = a.frobenius_norm();
  if (a.asymmetry() > 1e-12 * (fro > 0.0 ? fro : 1.0)) throw DomainError("lanczos_run: matrix is not symmetric");
  const double vn = nrm2(v);
  if (!(vn > 0.0)) throw DomainError("lanczos_run: zero start vector");
  const std::size_t n = a.rows();

  LanczosResult out;
  Vector v1 = v;
  scale(1.0 / vn, v1);
  out.v.push_back(std::move(v1));
  Vector m(n);
  double eta_prev = 0.0;
  for (std::size_t k = 0; k < steps && k < n; ++k) {
    a.apply(out.v[k], m);
    const double amv = nrm2(m);
    if (k > 0) axpy(-eta_prev, out.v[k - 1], m);
    const double omega = dot(out.v[k], m);
    axpy(-omega, out.v[k], m);
    const double eta = nrm2(m);
    out.omega.push_back(omega);
    if (eta <= 1e-14 * amv) {
      out.eta.push_back(0.0);
      out.invariant = true;
      break;
    }
    out.eta.push_back(eta);
    scale(1.0 / eta, m);
    out.v.push_back(m);
    eta_prev = eta;
  }
  return out;
}

/// Dense column-major k x k tridiagonal matrix from diagonal, super- and
/// sub-diagonal entries.
inline Vector tridiagonal(std::span<const double> diag, std::span<const double> upper,
                          std::span<const double> lower) {
  const std::size_t k = diag.size();
  Vector t(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    t[i + i * k] = diag[i];
    if (i + 1 < k) {
      t[i + (i + 1) * k] = upper[i];
      t[(i + 1) + i * k] = lower[i];
    }
  }
  return t;
}

/// (T^{-1})_{11} of a dense column-major k x k matrix.
inline double inverse_11(std::span<const double> t, std::size_t k) {
  SmallLu lu(t, k, k);
  Vector e(k, 0.0);
  e[0] = 1.0;
  lu.solve(e);
  return e[0];
}

/// Lanczos coefficients reconstructed from CG's alpha_0.., beta_0..:
/// omega_1 = 1/alpha_0, omega_{j+1} = 1/alpha_j + beta_{j-1}/alpha_{j-1},
/// eta_{j+1} = sqrt(beta_j)/alpha_j. Returns the first k of each.
inline LanczosResult lanczos_from_cg(std::span<const double> alpha, std::span<const double> beta,
                                     std::size_t k) {
  if (alpha.size() < k || beta.size() < k) throw InsufficientTrace("lanczos_from_cg: not enough coefficients");
  LanczosResult out;
  for (std::size_t j = 0; j < k; ++j) {
    double w = 1.0 / alpha[j];
    if (j > 0) w += beta[j - 1] / alpha[j - 1];
    out.omega.push_back(w);
    out.eta.push_back(std::sqrt(beta[j]) / alpha[j]);
  }
  return out;
}

/// Nonsymmetric tridiagonal T_k built from Bi-CG coefficients. Only the
/// products of opposite off-diagonal entries (beta_j / alpha_j^2) are
/// determined; the split used here is upper = beta_j/alpha_j, lower = 1/alpha_j.
inline Vector bicg_tridiagonal(std::span<const double> alpha, std::span<const double> beta, std::size_t k) {
  if (alpha.size() < k || beta.size() + 1 < k) throw InsufficientTrace("bicg_tridiagonal: not enough coefficients");
  Vector diag(k), upper(k > 0 ? k - 1 : 0), lower(k > 0 ? k - 1 : 0);
  for (std::size_t j = 0; j < k; ++j) {
    diag[j] = 1.0 / alpha[j];
    if (j > 0) diag[j] += beta[j - 1] / alpha[j - 1];
    if (j + 1 < k) {
      upper[j] = beta[j] / alpha[j];
      lower[j] = 1.0 / alpha[j];
    }
  }
  return tridiagonal(diag, upper, lower);
}

}  // namespace kryest
