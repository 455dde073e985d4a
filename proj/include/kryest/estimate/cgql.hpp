#pragma once

/// \file kryest/estimate/cgql.hpp
/// \brief A-norm error estimates for CG: the delay sum (Gauss rule) and
/// Gauss-Radau brackets built from CG coefficients.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "kryest/error.hpp"
#include "kryest/estimate/delay_window.hpp"
#include "kryest/estimate/series.hpp"
#include "kryest/krylov/trace.hpp"

namespace kryest {

/// Streaming CGQL estimator. After CG step j the estimate for iteration
/// i = j - d + 1 is emitted:
///
///   gauss_i = sum_{l=i}^{i+d-1} alpha_l ||r_l||^2  <=  ||e_i||_A^2
///
/// With spectral bounds, the Gauss-Radau remainder alpha~_{i+d} ||r_{i+d}||^2
/// is added, where alpha~_0 = 1/mu and
/// alpha~_{l+1} = (alpha~_l - alpha_l) / (mu (alpha~_l - alpha_l) + beta_l);
/// mu = lambda_min gives an upper bound, mu = lambda_max a lower bound.
class CgqlEstimator {
 public:
  explicit CgqlEstimator(std::size_t d, std::optional<double> lambda_min = std::nullopt,
                         std::optional<double> lambda_max = std::nullopt)
      : d_(d), window_(d, 0), lmin_(lambda_min), lmax_(lambda_max) {
    if (lmin_ && !(*lmin_ > 0.0)) throw DomainError("CgqlEstimator: lambda_min must be > 0");
    if (lmin_ && lmax_ && !(*lmin_ < *lmax_)) throw DomainError("CgqlEstimator: lambda_min >= lambda_max");
    if (lmax_ && !(*lmax_ > 0.0)) throw DomainError("CgqlEstimator: lambda_max must be > 0");
    gauss_.kind = EstimatorKind::cgql_gauss;
    upper_.kind = EstimatorKind::cgql_radau;
    lower_.kind = EstimatorKind::cgql_radau_lower;
    gauss_.d = upper_.d = lower_.d = d;
    if (lmin_) at_upper_ = 1.0 / *lmin_;
    if (lmax_) at_lower_ = 1.0 / *lmax_;
  }

  Control operator()(const DirectionStep& s) {
    observe(s.k, s.alpha, s.beta, s.rr, s.rr_next);
    return Control::proceed;
  }

  /// Feed CG step k: alpha_k, beta_k = rr_next/rr, rr = ||r_k||^2.
  void observe(std::size_t k, double alpha, double beta, double rr, double rr_next) {
    if (!(alpha > 0.0)) throw QuadratureBreakdown("CgqlEstimator: non-positive pivot (alpha_k <= 0)");
    window_.push(k, alpha, {}, alpha * rr);
    last_k_ = k;
    rr_next_ = rr_next;
    if (lmin_) at_upper_ = radau_step(*lmin_, at_upper_, alpha, beta, true);
    if (lmax_) at_lower_ = radau_step(*lmax_, at_lower_, alpha, beta, false);
    if (window_.full()) emit(window_.front_index(), 0);
  }

  /// Emit the estimates still pending at the end of a run, from truncated
  /// windows, plus 0 for the final iterate. Only meaningful when the last
  /// iterate is (numerically) exact.
  void finalize(bool exact_tail) {
    if (!exact_tail || !last_k_) return;
    for (std::size_t off = window_.full() ? 1 : 0; off < window_.size(); ++off)
      emit(window_.front_index() + off, off, flags::partial_window);
    // the final iterate is exact: empty window
    gauss_.push(*last_k_ + 1, 0.0, 0.0, flags::partial_window);
    if (lmin_) upper_.push(*last_k_ + 1, 0.0, 0.0, flags::partial_window);
    if (lmax_) lower_.push(*last_k_ + 1, 0.0, 0.0, flags::partial_window);
  }

  const EstimateSeries& gauss() const noexcept { return gauss_; }
  const EstimateSeries& radau_upper() const noexcept { return upper_; }
  const EstimateSeries& radau_lower() const noexcept { return lower_; }
  bool has_upper() const noexcept { return lmin_.has_value(); }
  bool has_lower() const noexcept { return lmax_.has_value(); }
  std::size_t d() const noexcept { return d_; }

 private:
  static double radau_step(double mu, double at, double alpha, double beta, bool upper) {
    double diff = at - alpha;
    // upper: alpha~ >= alpha; lower: alpha~ <= alpha
    const double wrong = upper ? -diff : diff;
    if (wrong > 0.0) {
      if (wrong > 1e-10 * alpha) throw QuadratureBreakdown("CgqlEstimator: spectral bound inconsistent with CG");
      diff = 0.0;
    }
    const double next = diff / (mu * diff + beta);
    if (!std::isfinite(next) || next < 0.0) throw QuadratureBreakdown("CgqlEstimator: Radau pivot breakdown");
    return next;
  }

  void emit(std::size_t i, std::size_t off, std::uint32_t f = 0) {
    double sum = 0.0;
    for (std::size_t l = off; l < window_.size(); ++l) sum += window_.scalar(l);
    gauss_.push(i, sum, sum, f);
    if (lmin_) {
      const double v = sum + at_upper_ * rr_next_;
      upper_.push(i, v, v, f);
    }
    if (lmax_) {
      const double v = sum + at_lower_ * rr_next_;
      lower_.push(i, v, v, f);
    }
  }

  std::size_t d_;
  DelayWindow<double> window_;
  std::optional<double> lmin_, lmax_;
  double at_upper_ = 0.0, at_lower_ = 0.0, rr_next_ = 0.0;
  std::optional<std::size_t> last_k_;
  EstimateSeries gauss_, upper_, lower_;
};

/// Quadrature quantities on the Jacobi matrix rebuilt from CG coefficients
/// (one-based k = 1..K, stored at index k-1):
///
///   omega_k = 1/alpha_{k-1} + beta_{k-2}/alpha_{k-2},  eta_k^2 = beta_{k-1}/alpha_{k-1}^2
///   delta_1 = omega_1,  delta_k = omega_k - eta_{k-1}^2/delta_{k-1}
///   c_1^2 = 1,  c_{k+1}^2 = eta_k^2 c_k^2 / delta_k^2
///   g_k = ||r_0||^2 c_k^2 / delta_k                       (= alpha_{k-1} ||r_{k-1}||^2)
///   dbar_k(mu) = omega_k - mu - eta_{k-1}^2/dbar_{k-1}(mu),  obar_{k+1} = mu + eta_k^2/dbar_k
///   f_k(mu) = ||r_0||^2 eta_k^2 c_k^2 / (delta_k (obar_{k+1} delta_k - eta_k^2))
///
/// f_k(lambda_min) bounds ||e_k||_A^2 from above, f_k(lambda_max) from below.
struct CgqlQuadrature {
  std::vector<double> omega, eta_sq, delta, c_sq, g, f_upper, f_lower;
};

inline CgqlQuadrature cgql_quadrature(std::span<const double> alpha, std::span<const double> beta, double r0_sq,
                                      double lambda_min, double lambda_max) {
  if (!(lambda_min < lambda_max)) throw DomainError("cgql_quadrature: lambda_min >= lambda_max");
  const std::size_t kk = std::min(alpha.size(), beta.size());
  CgqlQuadrature q;
  double c_sq = 1.0, dbar_u = 0.0, dbar_l = 0.0;
  for (std::size_t k = 1; k <= kk; ++k) {
    double omega = 1.0 / alpha[k - 1];
    if (k >= 2) omega += beta[k - 2] / alpha[k - 2];
    const double eta_sq = beta[k - 1] / (alpha[k - 1] * alpha[k - 1]);
    const double eta_prev_sq = k >= 2 ? q.eta_sq[k - 2] : 0.0;
    const double delta = k == 1 ? omega : omega - eta_prev_sq / q.delta[k - 2];
    if (!(delta > 0.0)) throw QuadratureBreakdown("cgql_quadrature: delta_k <= 0");
    dbar_u = k == 1 ? omega - lambda_min : omega - lambda_min - eta_prev_sq / dbar_u;
    dbar_l = k == 1 ? omega - lambda_max : omega - lambda_max - eta_prev_sq / dbar_l;
    const double obar_u = lambda_min + eta_sq / dbar_u;
    const double obar_l = lambda_max + eta_sq / dbar_l;
    q.omega.push_back(omega);
    q.eta_sq.push_back(eta_sq);
    q.delta.push_back(delta);
    q.c_sq.push_back(c_sq);
    q.g.push_back(r0_sq * c_sq / delta);
    q.f_upper.push_back(r0_sq * eta_sq * c_sq / (delta * (obar_u * delta - eta_sq)));
    q.f_lower.push_back(r0_sq * eta_sq * c_sq / (delta * (obar_l * delta - eta_sq)));
    c_sq = eta_sq * c_sq / (delta * delta);
  }
  return q;
}

}  // namespace kryest
