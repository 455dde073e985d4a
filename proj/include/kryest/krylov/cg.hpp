#pragma once

/// \file kryest/krylov/cg.hpp
/// \brief Conjugate gradients for symmetric positive definite systems.

#include <utility>

#include "kryest/error.hpp"
#include "kryest/krylov/trace.hpp"

namespace kryest {

/// Run CG from p.x0. The observer sees a DirectionStep after each step and
/// may stop the run.
///
/// Throws DomainError if A is not symmetric to 1e-12 (Frobenius, relative to
/// ||A||_F) and Breakdown{indefinite} when p_k^T A p_k <= 0.
template <class Observer = NoObserver>
ConvergenceTrace cg_run(const ProblemInstance& p, SolveOptions opt = {}, Observer&& observer = {}) {
  const std::size_t n = p.n();
  const double fro = p.a.frobenius_norm();
  if (p.a.asymmetry() > 1e-12 * (fro > 0.0 ? fro : 1.0)) throw DomainError("cg_run: matrix is not symmetric");
  const std::size_t max_it = detail::budget(p, opt);

  ConvergenceTrace t = detail::start_trace(p, "cg");
  Vector x = p.x0, r(n), r_next(n), pk(n), ap(n), scratch(n);
  p.a.apply(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = p.b[i] - ap[i];
  pk = r;
  double rr = dot(r, r);
  t.r0_norm = std::sqrt(rr);
  t.records.push_back(detail::make_record(p, 0, x, t.r0_norm, opt.true_residual, scratch));
  if (rr == 0.0) {
    t.status = SolveStatus::exact;
    t.x_final = x;
    return t;
  }

  for (std::size_t k = 0; k < max_it; ++k) {
    p.a.apply(pk, ap);
    const double pap = dot(pk, ap);
    if (!(pap > 0.0)) throw Breakdown(Breakdown::Kind::indefinite, k, "cg_run: p^T A p <= 0");
    const double alpha = rr / pap;
    axpy(alpha, pk, x);
    for (std::size_t i = 0; i < n; ++i) r_next[i] = r[i] - alpha * ap[i];
    const double rr_next = dot(r_next, r_next);
    const double beta = rr_next / rr;
    t.records[k].alpha = alpha;
    t.records[k].beta = beta;
    t.records.push_back(detail::make_record(p, k + 1, x, std::sqrt(rr_next), opt.true_residual, scratch));

    const DirectionStep step{k, alpha, beta, r, r_next, pk, ap, x, rr, rr_next, t.records.back()};
    const Control c = observer(step);

    if (!all_finite(x)) throw Breakdown(Breakdown::Kind::numerical, k, "cg_run: non-finite iterate");
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
    for (std::size_t i = 0; i < n; ++i) pk[i] = r_next[i] + beta * pk[i];
    std::swap(r, r_next);
    rr = rr_next;
  }
  t.x_final = std::move(x);
  return t;
}

}  // namespace kryest
