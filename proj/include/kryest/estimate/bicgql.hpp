#pragma once

/// \file kryest/estimate/bicgql.hpp
/// \brief O(n) A-measure and l2 error estimates for Bi-CG (also valid on CG
/// iterates, which Bi-CG reproduces for symmetric A).

#include <cmath>
#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

#include "kryest/estimate/delay_window.hpp"
#include "kryest/estimate/series.hpp"
#include "kryest/krylov/trace.hpp"
#include "kryest/linalg.hpp"

namespace kryest {

/// Streaming BiCGQL estimator, templated on the scalar so that the
/// arithmetic can be counted.
///
/// With S_i = sum_{j=i}^{i+d-1} alpha_j p_j (so that e_i ~ S_i):
///
///   A-measure, i >= 1:  -alpha_{i-1} r_{i-1}^T p_{i-1} + r_i^T (alpha_{i-1} p_{i-1} + S_i)
///                       + alpha_{i-1}^2 p_{i-1}^T A p_{i-1}
///   A-measure, i = 0:   r_0^T S_0
///   l2:                 ||S_i||^2
///
/// Both are emitted for iteration i after step i+d-1. The A-measure value
/// is |raw| (the raw signed value is kept).
template <class Real = double>
class BicgqlEstimator {
 public:
  BicgqlEstimator(std::size_t n, std::size_t d) : n_(n), d_(d), pwin_(d, n), rwin_(d, n), s_(n) {
    anorm_.kind = EstimatorKind::bicgql_anorm;
    l2_.kind = EstimatorKind::bicgql_l2;
    anorm_.d = l2_.d = d;
  }

  Control operator()(const DirectionStep& s)
    requires std::is_same_v<Real, double>
  {
    observe(s.k, s.alpha, s.r, s.r_next, s.p, s.ap);
    return Control::proceed;
  }

  /// Feed step k: alpha_k, r_k, r_{k+1}, p_k and A p_k.
  void observe(std::size_t k, Real alpha, std::span<const Real> r, std::span<const Real> r_next,
               std::span<const Real> p, std::span<const Real> ap) {
    rwin_.push(k, pending_c_, r);
    pwin_.push(k, alpha, p);
    // correction term for iteration k+1, used d steps later
    pending_c_ = -alpha * dot<Real>(r, p) + alpha * dot<Real>(r_next, p) + alpha * alpha * dot<Real>(p, ap);
    ++steps_;
    last_k_ = k;
    if (pwin_.full()) emit(0);
  }

  /// Emit pending tail estimates from truncated windows, plus 0 for the
  /// final iterate (only meaningful when that iterate is numerically exact).
  void finalize(bool exact_tail) {
    if (!exact_tail || steps_ == 0) return;
    for (std::size_t off = pwin_.full() ? 1 : 0; off < pwin_.size(); ++off) emit(off, flags::partial_window);
    anorm_.push(last_k_ + 1, 0.0, 0.0, flags::partial_window);
    l2_.push(last_k_ + 1, 0.0, 0.0, flags::partial_window);
  }

  const EstimateSeries& anorm() const noexcept { return anorm_; }
  const EstimateSeries& l2() const noexcept { return l2_; }
  std::size_t d() const noexcept { return d_; }

 private:
  void emit(std::size_t off, std::uint32_t f = 0) {
    const std::size_t i = pwin_.front_index() + off;
    for (std::size_t t = 0; t < n_; ++t) s_[t] = Real{0};
    for (std::size_t l = off; l < pwin_.size(); ++l) axpy<Real>(pwin_.alpha(l), pwin_.p(l), std::span<Real>(s_));
    const std::span<const Real> s(s_);
    const Real c = i == 0 ? Real{0} : rwin_.alpha(off);
    const Real a_raw = c + dot<Real>(rwin_.p(off), s);
    const Real l2 = norm2_sq<Real>(s);
    const double a = static_cast<double>(a_raw);
    anorm_.push(i, a, std::abs(a), f);
    l2_.push(i, static_cast<double>(l2), static_cast<double>(l2), f);
  }

  std::size_t n_, d_;
  DelayWindow<Real> pwin_;  ///< alpha_j, p_j
  DelayWindow<Real> rwin_;  ///< correction c_j (alpha slot), r_j
  std::vector<Real> s_;
  Real pending_c_{0};
  std::size_t steps_ = 0, last_k_ = 0;
  EstimateSeries anorm_, l2_;
};

}  // namespace kryest
