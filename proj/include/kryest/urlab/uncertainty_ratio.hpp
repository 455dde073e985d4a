#pragma once

/// \file kryest/urlab/uncertainty_ratio.hpp
/// \brief Uncertainty ratio of residual-based versus estimator-based
/// relative error, with its expected value and upper bound.

#include <cmath>
#include <cstddef>
#include <string>

#include "kryest/error.hpp"
#include "kryest/estimate/series.hpp"
#include "kryest/krylov/trace.hpp"
#include "kryest/stopcrit/policy.hpp"

namespace kryest {

struct UrValue {
  double value = kNaN;
  std::size_t included = 0;
  std::size_t skipped = 0;  ///< guarded or missing terms
};

/// U.R.^(j) over k = 0 .. m-d-1 (m = iterations executed):
///
///   mean_k | (||r_k||^j/||b||^j - ||e_k||^j/||x||^j) / (chi_k^j/||x||^j - ||e_k||^j/||x||^j) |
///
/// Terms whose denominator is below 1e-14 (||e_k||/||x||)^j, or that have no
/// valid estimate, are skipped and counted; the mean runs over the
/// remaining terms. A-norm series are compared with ||e_k||_A and ||x||_A.
inline UrValue uncertainty_ratio(const ConvergenceTrace& t, const EstimateSeries& s, int j, std::size_t d,
                                 XNormSource xnorm = XNormSource::oracle) {
  if (j != 1 && j != 2) throw DomainError("uncertainty_ratio: j must be 1 or 2");
  if (!t.has_oracle()) throw DomainError("uncertainty_ratio: trace has no oracle errors");
  const std::size_t m = t.iterations();
  if (m <= d) throw InsufficientTrace("uncertainty_ratio: " + std::to_string(m) + " iterations with d = " +
                                     std::to_string(d));
  const bool anorm = s.anorm();
  const auto pw = [j](double v) { return j == 1 ? v : v * v; };
  UrValue u;
  double sum = 0.0;
  for (std::size_t k = 0; k + d < m; ++k) {
    const IterationRecord& rec = t.records[k];
    const EstimatePoint* pt = s.at(k);
    if (pt == nullptr || !pt->valid()) {
      ++u.skipped;
      continue;
    }
    double xn;
    if (anorm) xn = xnorm == XNormSource::oracle ? t.x_true_anorm : kNaN;
    else xn = xnorm == XNormSource::oracle ? t.x_true_norm : rec.x_norm;
    if (anorm && xnorm == XNormSource::iterate)
      throw DomainError("uncertainty_ratio: A-norm series need the oracle ||x||_A");
    const double err = anorm ? std::sqrt(rec.true_err_anorm_sq) : rec.true_err_norm;
    const double e_rel = pw(err / xn);
    const double num = pw(rec.res_norm / t.b_norm) - e_rel;
    const double den = pw(pt->chi / xn) - e_rel;
    if (!(std::abs(den) >= 1e-14 * e_rel)) {
      ++u.skipped;
      continue;
    }
    sum += std::abs(num / den);
    ++u.included;
  }
  if (u.included == 0) throw InsufficientTrace("uncertainty_ratio: every term was skipped");
  u.value = sum / static_cast<double>(u.included);
  return u;
}

struct UrSample {
  std::string label;
  double kappa_forward = kNaN;
  double kappa_f_forward = kNaN;
  double ur1 = kNaN, ur2 = kNaN;
  std::size_t d = 0, n = 0;
  std::size_t iterations = 0;
  std::size_t included = 0;
  std::size_t skipped_iterations = 0;
  std::string status = "ok";
};

/// Both ratios of one run; the condition numbers are filled by the caller.
inline UrSample ur_sample(const ConvergenceTrace& t, const EstimateSeries& s, std::size_t d, std::size_t n,
                          XNormSource xnorm = XNormSource::oracle) {
  const UrValue u1 = uncertainty_ratio(t, s, 1, d, xnorm);
  const UrValue u2 = uncertainty_ratio(t, s, 2, d, xnorm);
  UrSample out;
  out.ur1 = u1.value;
  out.ur2 = u2.value;
  out.d = d;
  out.n = n;
  out.iterations = t.iterations();
  out.included = std::min(u1.included, u2.included);
  out.skipped_iterations = std::max(u1.skipped, u2.skipped);
  return out;
}

struct TheoryCurve {
  double e_ur1 = kNaN;
  double e_ur2 = kNaN;
};

/// Expected U.R. for isotropic singular vectors:
///
///   E1 = sqrt(2/3) kF (1 + d/(n-d) ln((sqrt n - sqrt(d/2)) / (sqrt(d+1) - sqrt(d/2))) + sqrt(2d)/(sqrt n + sqrt d))
///   E2 = kF^2 (1 + d/(n-d) ln(n-d))
inline TheoryCurve theory_expectations(std::size_t n, std::size_t d, double kappa_f_forward) {
  if (d < 1 || d >= n) throw DomainError("theory_expectations: need 1 <= d < n");
  if (!(kappa_f_forward > 0.0)) throw DomainError("theory_expectations: kappa_F must be positive");
  const double nn = static_cast<double>(n), dd = static_cast<double>(d);
  const double h = std::sqrt(dd / 2.0);
  const double w = dd / (nn - dd);
  TheoryCurve c;
  c.e_ur1 = std::sqrt(2.0 / 3.0) * kappa_f_forward *
            (1.0 + w * std::log((std::sqrt(nn) - h) / (std::sqrt(dd + 1.0) - h)) +
             std::sqrt(2.0 * dd) / (std::sqrt(nn) + std::sqrt(dd)));
  c.e_ur2 = kappa_f_forward * kappa_f_forward * (1.0 + w * std::log(nn - dd));
  return c;
}

struct TheoryBounds {
  double ub1 = kNaN;
  double ub2 = kNaN;
};

/// Upper bounds for a run stopped at tolerance E:
/// ub1 = 2 kappa(A,x) (1/E^2)^{d/n}, ub2 = kappa(A,x)^2 (1/E^2)^{d/n}.
inline TheoryBounds theory_bounds(std::size_t n, std::size_t d, double kappa_forward, double tol) {
  if (n == 0 || d >= n) throw DomainError("theory_bounds: need d < n");
  if (!(tol > 0.0 && tol < 1.0)) throw DomainError("theory_bounds: tolerance must lie in (0, 1)");
  if (!(kappa_forward > 0.0)) throw DomainError("theory_bounds: kappa must be positive");
  const double growth = std::pow(1.0 / (tol * tol), static_cast<double>(d) / static_cast<double>(n));
  return {2.0 * kappa_forward * growth, kappa_forward * kappa_forward * growth};
}

}  // namespace kryest
