#pragma once

/// \file kryest/estimate/driver.hpp
/// \brief Runs a solver with one estimator attached and collects the series.

#include <functional>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "kryest/error.hpp"
#include "kryest/estimate/bicgql.hpp"
#include "kryest/estimate/cgql.hpp"
#include "kryest/estimate/gmres_estimator.hpp"
#include "kryest/estimate/series.hpp"
#include "kryest/krylov/bicg.hpp"
#include "kryest/krylov/cg.hpp"
#include "kryest/krylov/gmres.hpp"

namespace kryest {

enum class SolverKind { cg, bicg, gmres };

/// Estimator variants as named on the command line.
enum class EstimatorChoice { cgql, bicgql_anorm, bicgql_l2, gmres_original, gmres_modified };

inline std::string to_string(SolverKind s) {
  switch (s) {
    case SolverKind::cg: return "cg";
    case SolverKind::bicg: return "bicg";
    case SolverKind::gmres: return "gmres";
  }
  return "?";
}

inline std::string to_string(EstimatorChoice e) {
  switch (e) {
    case EstimatorChoice::cgql: return "cgql";
    case EstimatorChoice::bicgql_anorm: return "bicgql-anorm";
    case EstimatorChoice::bicgql_l2: return "bicgql-l2";
    case EstimatorChoice::gmres_original: return "gmres-orig";
    case EstimatorChoice::gmres_modified: return "gmres-mod";
  }
  return "?";
}

inline SolverKind parse_solver(const std::string& s) {
  if (s == "cg") return SolverKind::cg;
  if (s == "bicg") return SolverKind::bicg;
  if (s == "gmres") return SolverKind::gmres;
  throw DomainError("unknown solver '" + s + "'");
}

inline EstimatorChoice parse_estimator(const std::string& s) {
  for (auto e : {EstimatorChoice::cgql, EstimatorChoice::bicgql_anorm, EstimatorChoice::bicgql_l2,
                 EstimatorChoice::gmres_original, EstimatorChoice::gmres_modified})
    if (s == to_string(e)) return e;
  throw DomainError("unknown estimator '" + s + "'");
}

/// CGQL needs CG, BiCGQL runs on Bi-CG or CG iterates, the Hessenberg
/// estimators need GMRES.
inline bool compatible(SolverKind s, EstimatorChoice e) {
  switch (e) {
    case EstimatorChoice::cgql: return s == SolverKind::cg;
    case EstimatorChoice::bicgql_anorm:
    case EstimatorChoice::bicgql_l2: return s == SolverKind::cg || s == SolverKind::bicg;
    case EstimatorChoice::gmres_original:
    case EstimatorChoice::gmres_modified: return s == SolverKind::gmres;
  }
  return false;
}

/// Default estimator for a solver.
inline EstimatorChoice default_estimator(SolverKind s) {
  return s == SolverKind::gmres ? EstimatorChoice::gmres_modified : EstimatorChoice::bicgql_l2;
}

struct EstimatorOptions {
  std::size_t d = 10;
  std::optional<double> lambda_min, lambda_max;  ///< CGQL Radau nodes
  bool finalize_exact_tail = true;               ///< emit tail estimates after exact termination
};

struct EstimatedRun {
  ConvergenceTrace trace;
  std::optional<EstimatorChoice> estimator;
  EstimateSeries primary;             ///< series of the selected variant
  std::vector<EstimateSeries> all;    ///< every series the estimator produced
  std::vector<double> s_norms;        ///< GMRES only, indexed by step
  std::optional<std::size_t> trigger_step;
};

/// Called after every iteration with the newest record and the primary
/// series so far (empty when no estimator is attached).
using StopCheck = std::function<Control(const IterationRecord&, const EstimateSeries&)>;

namespace detail {

template <class Obs>
ConvergenceTrace dispatch_solver(SolverKind s, const ProblemInstance& p, const SolveOptions& opt, Obs&& obs) {
  if constexpr (std::is_invocable_v<Obs&, const DirectionStep&>) {
    if (s == SolverKind::cg) return cg_run(p, opt, obs);
    if (s == SolverKind::bicg) return bicg_run(p, opt, obs);
  }
  if constexpr (std::is_invocable_v<Obs&, const ArnoldiStep&>) {
    if (s == SolverKind::gmres) return gmres_run(p, opt, obs);
  }
  throw DomainError("solver " + to_string(s) + " cannot drive this observer");
}

inline EstimateSeries empty_series() { return EstimateSeries{}; }

}  // namespace detail

/// Run `solver` on p with `estimator` attached (or none). `stop` may end
/// the run early; it sees each record after the estimator has consumed the
/// step.
inline EstimatedRun run_estimated(const ProblemInstance& p, SolverKind solver, std::optional<EstimatorChoice> estimator,
                                  const EstimatorOptions& eo = {}, const SolveOptions& opt = {},
                                  const StopCheck& stop = {}) {
  EstimatedRun out;
  out.estimator = estimator;
  const auto check = [&](const IterationRecord& rec, const EstimateSeries& s) {
    return stop ? stop(rec, s) : Control::proceed;
  };

  if (!estimator) {
    const EstimateSeries none = detail::empty_series();
    auto obs = [&](const auto& step) { return check(step.record, none); };
    if (solver == SolverKind::cg) out.trace = cg_run(p, opt, obs);
    else if (solver == SolverKind::bicg) out.trace = bicg_run(p, opt, obs);
    else out.trace = gmres_run(p, opt, obs);
    return out;
  }
  const EstimatorChoice e = *estimator;
  if (!compatible(solver, e))
    throw DomainError("estimator " + to_string(e) + " is not available for solver " + to_string(solver));
  if (eo.d == 0) throw DomainError("run_estimated: d must be >= 1");

  if (e == EstimatorChoice::cgql) {
    CgqlEstimator est(eo.d, eo.lambda_min, eo.lambda_max);
    auto obs = [&](const DirectionStep& s) {
      est(s);
      return check(s.record, est.gauss());
    };
    out.trace = detail::dispatch_solver(solver, p, opt, obs);
    est.finalize(eo.finalize_exact_tail && out.trace.exact_termination());
    out.primary = est.gauss();
    out.all.push_back(est.gauss());
    if (est.has_upper()) out.all.push_back(est.radau_upper());
    if (est.has_lower()) out.all.push_back(est.radau_lower());
  } else if (e == EstimatorChoice::bicgql_anorm || e == EstimatorChoice::bicgql_l2) {
    BicgqlEstimator<double> est(p.n(), eo.d);
    const bool l2 = e == EstimatorChoice::bicgql_l2;
    auto obs = [&](const DirectionStep& s) {
      est(s);
      return check(s.record, l2 ? est.l2() : est.anorm());
    };
    out.trace = detail::dispatch_solver(solver, p, opt, obs);
    est.finalize(eo.finalize_exact_tail && out.trace.exact_termination());
    out.primary = l2 ? est.l2() : est.anorm();
    out.all = {est.anorm(), est.l2()};
  } else {
    GmresEstimator est(eo.d);
    const bool mod = e == EstimatorChoice::gmres_modified;
    auto obs = [&](const ArnoldiStep& s) {
      est(s);
      return check(s.record, mod ? est.modified() : est.original());
    };
    out.trace = detail::dispatch_solver(solver, p, opt, obs);
    est.finalize(eo.finalize_exact_tail && out.trace.exact_termination());
    out.primary = mod ? est.modified() : est.original();
    out.all = {est.original(), est.modified()};
    out.s_norms = est.s_norms();
    out.trigger_step = est.trigger().first_step();
  }
  return out;
}

}  // namespace kryest
