#pragma once

/// \file kryest/stopcrit/policy.hpp
/// \brief Stopping policies and the solver runs they drive.

#include <optional>
#include <string>
#include <vector>

#include "kryest/error.hpp"
#include "kryest/estimate/driver.hpp"

namespace kryest {

enum class PolicyKind { relative_residual, estimator_relative_error, oracle_relative_error };

/// Where ||x|| in a relative error comes from.
enum class XNormSource { iterate, oracle };

inline std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::relative_residual: return "residual";
    case PolicyKind::estimator_relative_error: return "estimator";
    case PolicyKind::oracle_relative_error: return "oracle";
  }
  return "?";
}

inline std::string to_string(XNormSource s) { return s == XNormSource::iterate ? "iterate" : "oracle"; }

struct StoppingPolicy {
  PolicyKind kind = PolicyKind::relative_residual;
  double tol = 1e-6;
  EstimatorChoice estimator = EstimatorChoice::bicgql_l2;  ///< estimator policies only
  XNormSource xnorm = XNormSource::iterate;

  void validate() const {
    if (!(tol > 0.0 && tol <= 1.0)) throw DomainError("StoppingPolicy: tol must lie in (0, 1]");
  }
};

struct PolicyRun {
  EstimatedRun run;
  std::size_t stop_index = 0;  ///< iterations executed when the run ended
  bool satisfied = false;      ///< policy met (or exact solution reached)
};

/// Run `solver` on p until `policy` holds, checking after every completed
/// iteration. A policy never met within max_it is reported with
/// satisfied = false and stop_index = iterations executed.
///
/// The residual policy uses the recurrence residual. The estimator policy
/// tests chi_i / ||x_i|| <= tol as soon as the estimate for iteration i is
/// emitted, d steps later; A-norm estimates are compared as they are.
inline PolicyRun run_with_policy(const ProblemInstance& p, SolverKind solver, const StoppingPolicy& policy,
                                 std::size_t d, std::size_t max_it = 0) {
  policy.validate();
  if (policy.kind == PolicyKind::oracle_relative_error && !p.x_true)
    throw DomainError("run_with_policy: oracle policy needs the true solution");

  std::optional<EstimatorChoice> est;
  if (policy.kind == PolicyKind::estimator_relative_error) {
    est = policy.estimator;
    if (!compatible(solver, *est))
      throw DomainError("policy estimator " + to_string(*est) + " needs a different solver than " +
                        to_string(solver));
  }
  const double b_norm = nrm2(p.b);
  const double xt_norm = p.x_true ? nrm2(*p.x_true) : kNaN;
  if (policy.xnorm == XNormSource::oracle && !p.x_true)
    throw DomainError("run_with_policy: oracle x-norm needs the true solution");

  std::vector<double> x_norms{nrm2(p.x0)};
  bool met = false;
  std::size_t seen = 0;
  const StopCheck check = [&](const IterationRecord& rec, const EstimateSeries& s) {
    x_norms.push_back(rec.x_norm);
    switch (policy.kind) {
      case PolicyKind::relative_residual: met = rec.res_norm <= policy.tol * b_norm; break;
      case PolicyKind::oracle_relative_error: met = rec.true_err_norm <= policy.tol * xt_norm; break;
      case PolicyKind::estimator_relative_error:
        for (; seen < s.points.size() && !met; ++seen) {
          const EstimatePoint& pt = s.points[seen];
          if (!pt.valid()) continue;
          const double xn = policy.xnorm == XNormSource::oracle ? xt_norm : x_norms.at(pt.k);
          met = pt.chi <= policy.tol * xn;
        }
        break;
    }
    return met ? Control::stop : Control::proceed;
  };

  SolveOptions opt;
  opt.max_it = max_it;
  EstimatorOptions eo;
  eo.d = d;
  eo.finalize_exact_tail = false;
  PolicyRun out;
  out.run = run_estimated(p, solver, est, eo, opt, check);
  out.stop_index = out.run.trace.iterations();
  out.satisfied = met || out.run.trace.exact_termination();
  return out;
}

}  // namespace kryest
