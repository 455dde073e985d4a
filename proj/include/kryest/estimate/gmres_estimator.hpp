#pragma once

/// \file kryest/estimate/gmres_estimator.hpp
/// \brief l2 error estimates for GMRES computed from the Hessenberg matrix
/// alone, in the original form and with the FOM/GMRES offset removed.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "kryest/estimate/precision_trigger.hpp"
#include "kryest/estimate/series.hpp"
#include "kryest/krylov/trace.hpp"
#include "kryest/linalg.hpp"

namespace kryest {

/// Quantities behind the estimate of ||e_j||, j = k - d, at step k.
/// Vectors are indexed from 0 (e_1 is index 0).
struct HessenbergEstimatorState {
  std::size_t k = 0, j = 0;
  bool singular = false;
  double gamma = kNaN;          ///< gamma_j
  Vector w;                     ///< w_j = W_j Ht_j^{-1} e_1
  Vector t;                     ///< last column of (H_k^T H_k)^{-1}
  double t_kk = kNaN;
  double delta = kNaN;          ///< h_{k+1,k}^2 / (1 + h_{k+1,k}^2 t_kk)
  Vector u;                     ///< delta t
  Vector s;                     ///< (e_k, H_k^{-1} e_1) u  =  FOM - GMRES coefficients at k
  double s_norm = kNaN;
  double chi_sq_original = kNaN;
  double chi_sq_modified = kNaN;
  double modified_operand = kNaN;  ///< chi_sq_original/beta^2 - ||s||^2, before |.|
};

namespace detail {

struct FomOffset {
  bool singular = true;
  Vector y;  ///< H^{-1} e_1
  Vector t, u, s;
  double t_kk = kNaN, delta = kNaN;
};

/// FOM solution of the leading k x k block and its offset from the GMRES
/// solution, given h = h_{k+1,k}.
inline FomOffset fom_offset(const Hessenberg& h, std::size_t k, double hsub) {
  FomOffset o;
  const Vector hk = h.dense(k, k);
  const SmallLu lu(hk, k, k, 1e-14, true);
  if (lu.singular()) return o;
  o.singular = false;
  o.y.assign(k, 0.0);
  o.y[0] = 1.0;
  lu.solve(o.y);
  // t = H^{-1} H^{-T} e_k
  o.t.assign(k, 0.0);
  o.t[k - 1] = 1.0;
  lu.solve_transpose(o.t);
  lu.solve(o.t);
  o.t_kk = o.t[k - 1];
  const double h2 = hsub * hsub;
  o.delta = h2 / (1.0 + h2 * o.t_kk);
  o.u = o.t;
  scale(o.delta, o.u);
  o.s = o.u;
  scale(o.y[k - 1], o.s);
  return o;
}

}  // namespace detail

/// Evaluate both estimates of ||e_j|| at step k (j < k) of a GMRES run with
/// ||r_0|| = beta. `terminal` treats h_{k+1,k} as zero.
inline HessenbergEstimatorState gmres_estimate_at(const Hessenberg& h, std::size_t k, std::size_t j, double beta,
                                                  bool terminal) {
  HessenbergEstimatorState st;
  st.k = k;
  st.j = j;
  const double hk1 = terminal ? 0.0 : h(k, k - 1);
  const detail::FomOffset off_k = detail::fom_offset(h, k, hk1);
  if (off_k.singular) {
    st.singular = true;
    return st;
  }
  st.t = off_k.t;
  st.t_kk = off_k.t_kk;
  st.delta = off_k.delta;
  st.u = off_k.u;
  st.s = off_k.s;
  st.s_norm = nrm2(st.s);

  double scaled;  // chi_original^2 / beta^2
  if (j == 0) {
    st.gamma = 1.0;
    scaled = dot(off_k.y, off_k.y);
  } else {
    const std::size_t m = k - j;
    // trailing block Ht = H(j:k, j:k)
    Vector ht(m * m, 0.0);
    for (std::size_t c = 0; c < m; ++c)
      for (std::size_t r = 0; r < m && r <= c + 1; ++r) ht[r + c * m] = h(j + r, j + c);
    const SmallLu lu_t(ht, m, m, 1e-14, true);
    const double hj1 = h(j, j - 1);
    const detail::FomOffset off_j = detail::fom_offset(h, j, hj1);
    if (lu_t.singular() || off_j.singular) {
      st.singular = true;
      return st;
    }
    Vector hte1(m, 0.0);
    hte1[0] = 1.0;
    lu_t.solve(hte1);
    st.w.assign(j, 0.0);
    for (std::size_t r = 0; r < j; ++r)
      for (std::size_t c = 0; c < m; ++c) st.w[r] += h(r, j + c) * hte1[c];
    const Vector hj = h.dense(j, j);
    const SmallLu lu_j(hj, j, j, 1e-14, true);
    Vector hjw = st.w;
    lu_j.solve(hjw);
    const double denom = 1.0 - hj1 * hjw[j - 1];
    if (!(std::abs(denom) >= 1e-14)) {
      st.singular = true;
      return st;
    }
    st.gamma = hj1 * off_j.y[j - 1] / denom;
    Vector tail = off_j.s;
    axpy(st.gamma, hjw, tail);
    scaled = st.gamma * st.gamma * dot(hte1, hte1) + dot(tail, tail);
  }
  const double beta2 = beta * beta;
  st.chi_sq_original = beta2 * scaled;
  st.modified_operand = scaled - st.s_norm * st.s_norm;
  st.chi_sq_modified = beta2 * std::abs(st.modified_operand);
  if (!std::isfinite(st.chi_sq_original) || !std::isfinite(st.chi_sq_modified)) st.singular = true;
  return st;
}

/// Streaming GMRES estimator: at step k emits the estimates for j = k - d,
/// and feeds ||s_k|| to the precision trigger. Points emitted once the
/// trigger has latched carry flags::trigger.
class GmresEstimator {
 public:
  explicit GmresEstimator(std::size_t d, PrecisionTrigger trigger = PrecisionTrigger{})
      : d_(d), trigger_(trigger) {
    if (d == 0) throw DomainError("GmresEstimator: d must be >= 1");
    orig_.kind = EstimatorKind::gmres_original;
    mod_.kind = EstimatorKind::gmres_modified;
    orig_.d = mod_.d = d;
    s_norms_.push_back(kNaN);
  }

  Control operator()(const ArnoldiStep& s) {
    const std::size_t k = s.k;
    beta_ = s.beta;
    // mirror the newest column; a terminal step stores h_{k+1,k} = 0
    Vector col(k + 1);
    for (std::size_t i = 0; i <= k; ++i) col[i] = s.h(i, k - 1);
    if (s.terminal) col[k] = 0.0;
    h_.push_column(std::move(col));

    const double hsub = h_(k, k - 1);
    const detail::FomOffset off = detail::fom_offset(h_, k, hsub);
    const double sn = off.singular ? kNaN : nrm2(off.s);
    s_norms_.push_back(sn);
    if (!off.singular) trigger_.update(k, sn);

    if (k >= d_) emit(k, k - d_, 0);
    return Control::proceed;
  }

  /// Emit the estimates pending at the end of the run from the final
  /// Hessenberg matrix (exact when the run ended in a happy breakdown), and
  /// 0 for the final iterate.
  void finalize(bool exact_tail) {
    if (!exact_tail || h_.cols() == 0) return;
    const std::size_t kk = h_.cols();
    const std::size_t first = kk >= d_ ? kk - d_ + 1 : 0;
    for (std::size_t j = first; j < kk; ++j) emit(kk, j, flags::partial_window);
    const std::uint32_t f = flags::partial_window | (trigger_.latched() ? flags::trigger : 0u);
    orig_.push(kk, 0.0, 0.0, f);
    mod_.push(kk, 0.0, 0.0, f);
  }

  const EstimateSeries& original() const noexcept { return orig_; }
  const EstimateSeries& modified() const noexcept { return mod_; }
  /// ||s_k|| indexed by step k (entry 0 unused).
  const std::vector<double>& s_norms() const noexcept { return s_norms_; }
  const PrecisionTrigger& trigger() const noexcept { return trigger_; }
  const Hessenberg& hessenberg() const noexcept { return h_; }
  /// Scalar diagnostics of every emitted estimate, in emission order.
  const std::vector<HessenbergEstimatorState>& states() const noexcept { return states_; }
  double beta() const noexcept { return beta_; }
  std::size_t d() const noexcept { return d_; }

 private:
  void emit(std::size_t k, std::size_t j, std::uint32_t f) {
    HessenbergEstimatorState st = gmres_estimate_at(h_, k, j, beta_, false);
    if (trigger_.latched()) f |= flags::trigger;
    if (st.singular) {
      orig_.push_withheld(j, f);
      mod_.push_withheld(j, f);
    } else {
      orig_.push(j, st.chi_sq_original, st.chi_sq_original, f);
      const std::uint32_t fm = st.modified_operand < 0.0 ? f | flags::offset_negative : f;
      mod_.push(j, beta_ * beta_ * st.modified_operand, st.chi_sq_modified, fm);
    }
    st.w.clear();
    st.u.clear();
    st.t.clear();
    st.s.clear();
    states_.push_back(std::move(st));
  }

  std::size_t d_;
  PrecisionTrigger trigger_;
  Hessenberg h_;
  double beta_ = 0.0;
  std::vector<double> s_norms_;
  EstimateSeries orig_, mod_;
  std::vector<HessenbergEstimatorState> states_;
};

}  // namespace kryest
