#include <gtest/gtest.h>

#include <cstdlib>

#include "kryest/estimate/driver.hpp"
#include "kryest/matstore/problem.hpp"
#include "kryest/stopcrit/accounting.hpp"
#include "kryest/stopcrit/policy.hpp"

using namespace kryest;

namespace {

ProblemInstance identity3() {
  return make_problem(DenseMatrix::identity(3), Vector{1, 2, 3}, Vector(3, 0.0), "I");
}

/// Hand-built trace: ||b|| = ||x|| = 1 and prescribed residual/error curves.
ConvergenceTrace synthetic(const std::vector<double>& res, const std::vector<double>& err) {
  ConvergenceTrace t;
  t.b_norm = 1.0;
  t.x_true_norm = 1.0;
  for (std::size_t k = 0; k < res.size(); ++k) {
    IterationRecord r;
    r.k = k;
    r.res_norm = res[k];
    r.true_err_norm = err[k];
    r.x_norm = 1.0;
    t.records.push_back(r);
  }
  return t;
}

EstimateSeries series(const std::vector<double>& chi) {
  EstimateSeries s;
  for (std::size_t k = 0; k < chi.size(); ++k) s.push(k, chi[k] * chi[k], chi[k] * chi[k]);
  return s;
}

}  // namespace

TEST(Policy, IdentityStopsAtOneUnderEveryPolicy) {
  const ProblemInstance p = identity3();
  for (PolicyKind k : {PolicyKind::relative_residual, PolicyKind::estimator_relative_error,
                       PolicyKind::oracle_relative_error}) {
    for (double tol : {1e-2, 1e-8}) {
      StoppingPolicy pol;
      pol.kind = k;
      pol.tol = tol;
      const PolicyRun r = run_with_policy(p, SolverKind::cg, pol, 1);
      EXPECT_EQ(r.stop_index, 1u) << to_string(k);
      EXPECT_TRUE(r.satisfied) << to_string(k);
    }
  }
}

TEST(Policy, NonConvergenceIsReportedNotThrown) {
  const ProblemInstance p = generate_problem({60, 1e6, SpectrumKind::nonsym_posdef, 0.1, 3});
  StoppingPolicy pol;
  pol.tol = 1e-12;
  const PolicyRun r = run_with_policy(p, SolverKind::bicg, pol, 10, 5);
  EXPECT_FALSE(r.satisfied);
  EXPECT_EQ(r.stop_index, 5u);
}

TEST(Policy, ResidualStopMatchesAccounting) {
  const ProblemInstance p = generate_problem({80, 1e4, SpectrumKind::nonsym_posdef, 0.1, 4});
  const EstimatedRun full = run_estimated(p, SolverKind::bicg, EstimatorChoice::bicgql_l2, {}, {});
  for (double tol : {1e-2, 1e-4, 1e-6}) {
    const StopAccounting a = stop_accounting(full.trace, full.primary, tol, p.n());
    StoppingPolicy res;
    res.tol = tol;
    StoppingPolicy orc = res;
    orc.kind = PolicyKind::oracle_relative_error;
    ASSERT_TRUE(a.i_res && a.i_true);
    EXPECT_EQ(run_with_policy(p, SolverKind::bicg, res, 10).stop_index, *a.i_res);
    EXPECT_EQ(run_with_policy(p, SolverKind::bicg, orc, 10).stop_index, *a.i_true);
  }
}

TEST(Policy, EstimatorPolicyStopsOnceEstimateIsEmitted) {
  const ProblemInstance p = generate_problem({80, 1e4, SpectrumKind::nonsym_posdef, 0.1, 5});
  const std::size_t d = 10;
  StoppingPolicy pol;
  pol.kind = PolicyKind::estimator_relative_error;
  pol.tol = 1e-5;
  const PolicyRun r = run_with_policy(p, SolverKind::bicg, pol, d);
  ASSERT_TRUE(r.satisfied);
  const EstimatedRun full = run_estimated(p, SolverKind::bicg, EstimatorChoice::bicgql_l2, {}, {});
  const StopAccounting a = stop_accounting(full.trace, full.primary, pol.tol, p.n());
  ASSERT_TRUE(a.i_est);
  EXPECT_EQ(r.stop_index, *a.i_est + d);
}

TEST(Policy, RejectsBadConfigurations) {
  const ProblemInstance p = identity3();
  StoppingPolicy pol;
  pol.tol = 0.0;
  EXPECT_THROW(run_with_policy(p, SolverKind::cg, pol, 1), DomainError);
  pol.tol = 1e-3;
  pol.kind = PolicyKind::estimator_relative_error;
  pol.estimator = EstimatorChoice::gmres_modified;
  EXPECT_THROW(run_with_policy(p, SolverKind::cg, pol, 1), DomainError);
}

TEST(Accounting, SyntheticIndicesAndLosses) {
  // residual crosses 1e-3 at k=2, error at k=4, estimate at k=3
  const ConvergenceTrace t = synthetic({1, 1e-2, 5e-4, 1e-4, 1e-5}, {1, 1e-1, 1e-2, 5e-3, 1e-4});
  const EstimateSeries s = series({1, 1e-1, 2e-2, 8e-4});
  const StopAccounting a = stop_accounting(t, s, 1e-3, 50);
  EXPECT_EQ(a.i_res, 2u);
  EXPECT_EQ(a.i_true, 4u);
  EXPECT_EQ(a.i_est, 3u);
  EXPECT_TRUE(a.losses_defined);
  EXPECT_EQ(a.accuracy_loss, 2u);
  EXPECT_EQ(a.computation_loss, 0u);
  ASSERT_TRUE(a.delta_rel);
  EXPECT_DOUBLE_EQ(*a.delta_rel, 1.0 / 50.0);
}

TEST(Accounting, ComputationLossWhenResidualLags) {
  const ConvergenceTrace t = synthetic({1, 1e-1, 1e-2, 1e-3}, {1, 1e-4, 1e-5, 1e-6});
  const StopAccounting a = stop_accounting(t, EstimateSeries{}, 1e-3, 10);
  EXPECT_EQ(a.i_true, 1u);
  EXPECT_EQ(a.i_res, 3u);
  EXPECT_EQ(a.computation_loss, 2u);
  EXPECT_EQ(a.accuracy_loss, 0u);
  EXPECT_FALSE(a.i_est);
  EXPECT_FALSE(a.delta_rel);
}

TEST(Accounting, UnreachedToleranceLeavesLossesUndefined) {
  const ConvergenceTrace t = synthetic({1, 1e-1}, {1, 1e-1});
  const StopAccounting a = stop_accounting(t, EstimateSeries{}, 1e-6, 10);
  EXPECT_FALSE(a.i_res);
  EXPECT_FALSE(a.i_true);
  EXPECT_FALSE(a.losses_defined);
}

TEST(Accounting, IsPure) {
  const ProblemInstance p = generate_problem({50, 1e5, SpectrumKind::indefinite, 0.1, 6});
  const EstimatedRun run = run_estimated(p, SolverKind::bicg, EstimatorChoice::bicgql_l2, {}, {});
  for (double tol : {1e-3, 1e-6})
    EXPECT_EQ(stop_accounting(run.trace, run.primary, tol, p.n()), stop_accounting(run.trace, run.primary, tol, p.n()));
}

TEST(Accounting, IdentityHasNoLosses) {
  const ProblemInstance p = identity3();
  EstimatorOptions eo;
  eo.d = 1;
  const EstimatedRun run = run_estimated(p, SolverKind::cg, EstimatorChoice::bicgql_l2, eo);
  for (double tol : {1e-1, 1e-6}) {
    const StopAccounting a = stop_accounting(run.trace, run.primary, tol, p.n());
    ASSERT_TRUE(a.losses_defined);
    EXPECT_EQ(a.accuracy_loss, 0u);
    EXPECT_EQ(a.computation_loss, 0u);
  }
}

TEST(Accounting, EstimatorTracksTrueErrorOnIllConditionedPosdef) {
  const ProblemInstance p = generate_problem({100, 1e6, SpectrumKind::nonsym_posdef, 0.1, 1});
  const std::size_t d = 10;
  EstimatorOptions eo;
  eo.d = d;
  const EstimatedRun run = run_estimated(p, SolverKind::bicg, EstimatorChoice::bicgql_l2, eo);
  const StopAccounting a = stop_accounting(run.trace, run.primary, 1e-4, p.n());
  ASSERT_TRUE(a.i_res && a.i_est && a.i_true);
  const auto diff = [](std::size_t x, std::size_t y) { return std::llabs(static_cast<long long>(x) - static_cast<long long>(y)); };
  EXPECT_LE(diff(*a.i_est, *a.i_true), static_cast<long long>(d));
  EXPECT_GE(diff(*a.i_res, *a.i_est), diff(*a.i_true, *a.i_est));
}

TEST(Accounting, RejectsBadInput) {
  const ConvergenceTrace t = synthetic({1}, {1});
  EXPECT_THROW(stop_accounting(t, EstimateSeries{}, 0.0, 1), DomainError);
  EXPECT_THROW(stop_accounting(t, EstimateSeries{}, 1e-3, 0), DomainError);
  ConvergenceTrace no_oracle = t;
  no_oracle.x_true_norm = kNaN;
  EXPECT_THROW(stop_accounting(no_oracle, EstimateSeries{}, 1e-3, 1), DomainError);
}
