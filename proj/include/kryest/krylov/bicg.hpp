#pragma once

/// \file kryest/krylov/bicg.hpp
/// \brief Bi-conjugate gradients for general square systems.

#include <utility>

#include "kryest/error.hpp"
#include "kryest/krylov/trace.hpp"

namespace kryest {

/// Run Bi-CG from p.x0 with shadow start y_0 = x_0, so r~_0 = b - A^T x_0
/// (equal to r_0 for symmetric A or x_0 = 0).
///
/// A^T products use an explicit transpose, which makes the run bit-identical
/// to cg_run when A is symmetric.
///
/// Throws Breakdown{serious} when |q^T A p| < 1e-14 ||p|| ||q|| ||A||_F and
/// Breakdown{lanczos} when |r~^T r| < 1e-14 ||r~|| ||r||.
template <class Observer = NoObserver>
ConvergenceTrace bicg_run(const ProblemInstance& p, SolveOptions opt = {}, Observer&& observer = {}) {
  if (!p.a.square()) throw DomainError("bicg_run: matrix not square");
  const std::size_t n = p.n();
  const std::size_t max_it = detail::budget(p, opt);
  const DenseMatrix at = p.a.transpose();
  const double fro = p.a.frobenius_norm();
  constexpr double tiny = 1e-14;

  ConvergenceTrace t = detail::start_trace(p, "bicg");
  Vector x = p.x0, y = p.x0;
  Vector r(n), rt(n), r_next(n), rt_next(n), pk(n), qk(n), ap(n), atq(n), scratch(n);
  p.a.apply(x, ap);
  at.apply(y, atq);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = p.b[i] - ap[i];
    rt[i] = p.b[i] - atq[i];
  }
  pk = r;
  qk = rt;
  double rho = dot(rt, r);
  double rr = dot(r, r);
  t.r0_norm = std::sqrt(rr);
  t.records.push_back(detail::make_record(p, 0, x, t.r0_norm, opt.true_residual, scratch));
  if (rr == 0.0) {
    t.status = SolveStatus::exact;
    t.x_final = x;
    return t;
  }
  if (std::abs(rho) < tiny * nrm2(rt) * t.r0_norm)
    throw Breakdown(Breakdown::Kind::lanczos, 0, "bicg_run: r~^T r vanishes");

  for (std::size_t k = 0; k < max_it; ++k) {
    p.a.apply(pk, ap);
    const double qap = dot(qk, ap);
    if (!(std::abs(qap) >= tiny * nrm2(pk) * nrm2(qk) * fro))
      throw Breakdown(Breakdown::Kind::serious, k, "bicg_run: q^T A p vanishes");
    const double alpha = rho / qap;
    at.apply(qk, atq);
    axpy(alpha, pk, x);
    axpy(alpha, qk, y);
    for (std::size_t i = 0; i < n; ++i) {
      r_next[i] = r[i] - alpha * ap[i];
      rt_next[i] = rt[i] - alpha * atq[i];
    }
    const double rho_next = dot(rt_next, r_next);
    const double rr_next = dot(r_next, r_next);
    const double beta = rho_next / rho;
    t.records[k].alpha = alpha;
    t.records[k].beta = beta;
    t.records.push_back(detail::make_record(p, k + 1, x, std::sqrt(rr_next), opt.true_residual, scratch));

    const DirectionStep step{k, alpha, beta, r, r_next, pk, ap, x, rr, rr_next, t.records.back()};
    const Control c = observer(step);

    if (!all_finite(x)) throw Breakdown(Breakdown::Kind::numerical, k, "bicg_run: non-finite iterate");
    if (rr_next == 0.0) {
      t.status = SolveStatus::exact;
      break;
    }
    if (c == Control::stop) {
      t.status = SolveStatus::stopped;
      break;
    }
    if (opt.tol > 0.0 && std::sqrt(rr_next) <= opt.tol * t.b_norm) {
      t.status = SolveStatus::converged;
      break;
    }
    if (k + 1 < max_it && std::abs(rho_next) < tiny * nrm2(rt_next) * std::sqrt(rr_next))
      throw Breakdown(Breakdown::Kind::lanczos, k + 1, "bicg_run: r~^T r vanishes");
    for (std::size_t i = 0; i < n; ++i) {
      pk[i] = r_next[i] + beta * pk[i];
      qk[i] = rt_next[i] + beta * qk[i];
    }
    std::swap(r, r_next);
    std::swap(rt, rt_next);
    rho = rho_next;
    rr = rr_next;
  }
  t.x_final = std::move(x);
  return t;
}

}  // namespace kryest
