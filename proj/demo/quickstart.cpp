// Solve a generated nonsymmetric system with Bi-CG, watch the delayed l2
// error estimate next to the true error, then compare stopping rules.

#include <cstdio>

#include "kryest/estimate/driver.hpp"
#include "kryest/matstore/problem.hpp"
#include "kryest/stopcrit/accounting.hpp"
#include "kryest/urlab/uncertainty_ratio.hpp"

int main() {
  using namespace kryest;

  const ProblemInstance p = generate_problem({200, 1e5, SpectrumKind::nonsym_posdef, 0.1, 42});
  const ConditionReport c = condition_report(p);
  std::printf("n = %zu, kappa(A) = %.3g, kappa(A,x) = %.3g\n", p.n(), c.kappa_matrix, c.kappa_forward);

  EstimatorOptions eo;
  eo.d = 10;
  const EstimatedRun run = run_estimated(p, SolverKind::bicg, EstimatorChoice::bicgql_l2, eo);
  const ConvergenceTrace& t = run.trace;

  std::printf("\n%5s %12s %12s %12s\n", "k", "res/|b|", "err/|x|", "est/|x|");
  for (const EstimatePoint& pt : run.primary.points) {
    if (pt.k % 20 != 0) continue;
    const IterationRecord& r = t.records[pt.k];
    std::printf("%5zu %12.3e %12.3e %12.3e\n", pt.k, r.res_norm / t.b_norm, r.true_err_norm / t.x_true_norm,
                pt.chi / t.x_true_norm);
  }

  const UrSample u = ur_sample(t, run.primary, eo.d, p.n());
  std::printf("\nU.R.(1) = %.3g, U.R.(2) = %.3g over %zu iterations\n", u.ur1, u.ur2, u.included);

  std::printf("\n%8s %6s %6s %6s %9s %9s\n", "tol", "i_res", "i_est", "i_true", "acc.loss", "comp.loss");
  for (double tol : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const StopAccounting a = stop_accounting(t, run.primary, tol, p.n());
    const auto idx = [](const std::optional<std::size_t>& i) { return i ? static_cast<long>(*i) : -1L; };
    std::printf("%8.0e %6ld %6ld %6ld %9zu %9zu\n", tol, idx(a.i_res), idx(a.i_est), idx(a.i_true), a.accuracy_loss,
                a.computation_loss);
  }
}
