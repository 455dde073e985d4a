#pragma once

/// \file kryest/krylov/gmres.hpp
/// \brief Full (non-restarted) GMRES: modified Gram-Schmidt Arnoldi with
/// Givens rotations.

#include <algorithm>
#include <utility>

#include "kryest/error.hpp"
#include "kryest/krylov/trace.hpp"

namespace kryest {

/// Run GMRES from p.x0. x_k is formed at every step; the observer receives
/// the extended Hessenberg matrix.
///
/// The run ends cleanly with status `exact` on a happy breakdown
/// (h_{k+1,k} <= 1e-14 ||A v_k||) or when the basis spans the whole space
/// (k == n); in both cases h_{k+1,k} is stored as 0.
template <class Observer = NoObserver>
ConvergenceTrace gmres_run(const ProblemInstance& p, SolveOptions opt = {}, Observer&& observer = {}) {
  if (!p.a.square()) throw DomainError("gmres_run: matrix not square");
  const std::size_t n = p.n();
  const std::size_t max_it = std::min(detail::budget(p, opt), n);

  ConvergenceTrace t = detail::start_trace(p, "gmres");
  Vector x = p.x0, w(n), scratch(n);
  p.a.apply(x, w);
  Vector r0(n);
  for (std::size_t i = 0; i < n; ++i) r0[i] = p.b[i] - w[i];
  const double beta = nrm2(r0);
  t.r0_norm = beta;
  t.records.push_back(detail::make_record(p, 0, x, beta, opt.true_residual, scratch));
  if (beta == 0.0) {
    t.status = SolveStatus::exact;
    t.x_final = x;
    return t;
  }

  std::vector<Vector> v;
  v.reserve(max_it + 1);
  scale(1.0 / beta, r0);
  v.push_back(std::move(r0));
  Hessenberg h;
  Vector cs, sn, g{beta}, rmat;  // rmat: packed upper triangle of R, column by column
  Vector y;

  for (std::size_t k = 1; k <= max_it; ++k) {
    const std::size_t j = k - 1;
    p.a.apply(v[j], w);
    const double wnorm0 = nrm2(w);
    Vector col(k + 1, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      col[i] = dot(v[i], w);
      axpy(-col[i], v[i], w);
    }
    double hnext = nrm2(w);
    if (!std::isfinite(hnext)) throw Breakdown(Breakdown::Kind::numerical, k, "gmres_run: non-finite basis");
    const bool terminal = hnext <= 1e-14 * wnorm0 || k == n;
    if (terminal) hnext = 0.0;
    col[k] = hnext;
    h.push_column(col);

    // least squares update
    Vector c = col;
    for (std::size_t i = 0; i < j; ++i) {
      const double a = cs[i] * c[i] + sn[i] * c[i + 1];
      c[i + 1] = -sn[i] * c[i] + cs[i] * c[i + 1];
      c[i] = a;
    }
    const double rad = std::hypot(c[j], c[j + 1]);
    if (rad == 0.0) throw Breakdown(Breakdown::Kind::numerical, k, "gmres_run: singular least-squares system");
    cs.push_back(c[j] / rad);
    sn.push_back(c[j + 1] / rad);
    c[j] = rad;
    g.push_back(-sn[j] * g[j]);
    g[j] = cs[j] * g[j];
    rmat.insert(rmat.end(), c.begin(), c.begin() + static_cast<std::ptrdiff_t>(k));

    // x_k = x_0 + V_k R^{-1} g
    y.assign(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(k));
    const auto rij = [&](std::size_t i, std::size_t jj) { return rmat[jj * (jj + 1) / 2 + i]; };
    for (std::size_t i = k; i-- > 0;) {
      for (std::size_t jj = i + 1; jj < k; ++jj) y[i] -= rij(i, jj) * y[jj];
      y[i] /= rij(i, i);
    }
    x = p.x0;
    for (std::size_t i = 0; i < k; ++i) axpy(y[i], v[i], x);
    if (!all_finite(x)) throw Breakdown(Breakdown::Kind::numerical, k, "gmres_run: non-finite iterate");

    t.records.push_back(detail::make_record(p, k, x, std::abs(g[k]), opt.true_residual, scratch));
    const ArnoldiStep step{k, h, beta, terminal, x, t.records.back()};
    const Control ctl = observer(step);

    if (terminal) {
      t.status = SolveStatus::exact;
      break;
    }
    if (ctl == Control::stop) {
      t.status = SolveStatus::stopped;
      break;
    }
    if (opt.tol > 0.0 && std::abs(g[k]) <= opt.tol * t.b_norm) {
      t.status = SolveStatus::converged;
      break;
    }
    scale(1.0 / hnext, w);
    v.push_back(w);
  }
  t.x_final = std::move(x);
  return t;
}

/// Arnoldi basis and Hessenberg matrix after `steps` steps (no least
/// squares); used to check the Arnoldi relation.
struct ArnoldiResult {
  std::vector<Vector> v;  ///< k+1 basis vectors (k if the process terminated)
  Hessenberg h;
};

inline ArnoldiResult arnoldi(const DenseMatrix& a, const Vector& r0, std::size_t steps) {
  const std::size_t n = a.rows();
  ArnoldiResult out;
  Vector v0 = r0;
  const double beta = nrm2(v0);
  if (!(beta > 0.0)) throw DomainError("arnoldi: zero start vector");
  scale(1.0 / beta, v0);
  out.v.push_back(std::move(v0));
  Vector w(n);
  for (std::size_t k = 1; k <= std::min(steps, n); ++k) {
    a.apply(out.v[k - 1], w);
    Vector col(k + 1, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      col[i] = dot(out.v[i], w);
      axpy(-col[i], out.v[i], w);
    }
    col[k] = nrm2(w);
    out.h.push_column(col);
    if (col[k] == 0.0) break;
    scale(1.0 / col[k], w);
    out.v.push_back(w);
  }
  return out;
}

}  // namespace kryest
