#pragma once

/// \file kryest/stopcrit/accounting.hpp
/// \brief First-crossing indices of the residual, estimate and oracle
/// signals, and the iterations lost by trusting the residual.

#include <cstdlib>
#include <optional>

#include "kryest/error.hpp"
#include "kryest/estimate/series.hpp"
#include "kryest/krylov/trace.hpp"
#include "kryest/stopcrit/policy.hpp"

namespace kryest {

/// Indices are empty when the signal never reaches the tolerance; the
/// losses are then undefined (losses_defined = false).
struct StopAccounting {
  double tol = 0.0;
  std::size_t n = 0;
  std::optional<std::size_t> i_res;   ///< first k with ||r_k||/||b|| <= tol
  std::optional<std::size_t> i_est;   ///< first k with chi_k/||x|| <= tol
  std::optional<std::size_t> i_true;  ///< first k with ||e_k||/||x|| <= tol
  bool losses_defined = false;
  std::size_t accuracy_loss = 0;      ///< max(0, i_true - i_res)
  std::size_t computation_loss = 0;   ///< max(0, i_res - i_true)
  std::optional<double> delta_rel;    ///< |i_res - i_est| / n

  friend bool operator==(const StopAccounting&, const StopAccounting&) = default;
};

/// Account a trace that carries oracle errors. `series` may be empty (no
/// estimate); `xnorm` selects ||x_k|| or the true ||x|| for i_est, while
/// i_true always uses the true ||x||.
inline StopAccounting stop_accounting(const ConvergenceTrace& t, const EstimateSeries& series, double tol,
                                      std::size_t n, XNormSource xnorm = XNormSource::iterate) {
  if (!(tol > 0.0 && tol <= 1.0)) throw DomainError("stop_accounting: tol must lie in (0, 1]");
  if (!t.has_oracle()) throw DomainError("stop_accounting: trace has no oracle errors");
  if (n == 0) throw DomainError("stop_accounting: n must be positive");
  StopAccounting a;
  a.tol = tol;
  a.n = n;
  for (const IterationRecord& r : t.records) {
    if (!a.i_res && r.res_norm <= tol * t.b_norm) a.i_res = r.k;
    if (!a.i_true && r.true_err_norm <= tol * t.x_true_norm) a.i_true = r.k;
  }
  for (const EstimatePoint& pt : series.points) {
    if (!pt.valid() || pt.k >= t.records.size()) continue;
    const double xn = xnorm == XNormSource::oracle ? t.x_true_norm : t.records[pt.k].x_norm;
    if (pt.chi <= tol * xn) {
      a.i_est = pt.k;
      break;
    }
  }
  if (a.i_res && a.i_true) {
    a.losses_defined = true;
    if (*a.i_true > *a.i_res) a.accuracy_loss = *a.i_true - *a.i_res;
    if (*a.i_res > *a.i_true) a.computation_loss = *a.i_res - *a.i_true;
  }
  if (a.i_res && a.i_est) {
    const auto diff = static_cast<long long>(*a.i_res) - static_cast<long long>(*a.i_est);
    a.delta_rel = static_cast<double>(std::llabs(diff)) / static_cast<double>(n);
  }
  return a;
}

}  // namespace kryest
