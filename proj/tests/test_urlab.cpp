#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <set>

#include "kryest/estimate/driver.hpp"
#include "kryest/matstore/problem.hpp"
#include "kryest/urlab/sweep.hpp"
#include "kryest/urlab/uncertainty_ratio.hpp"

using namespace kryest;

namespace {

IterationRecord rec(std::size_t k, double res, double err) {
  IterationRecord r;
  r.k = k;
  r.res_norm = res;
  r.true_err_norm = err;
  r.x_norm = 1.0;
  return r;
}

ConvergenceTrace unit_trace(std::vector<IterationRecord> recs) {
  ConvergenceTrace t;
  t.b_norm = 1.0;
  t.x_true_norm = 1.0;
  t.records = std::move(recs);
  return t;
}

UrSample sample(double kappa, double ur) {
  UrSample s;
  s.kappa_forward = kappa;
  s.ur1 = ur;
  return s;
}

}  // namespace

TEST(UncertaintyRatio, SingleTermHandValue) {
  // |1e-2 - 1e-4| / |1.1e-4 - 1e-4| = 990
  const ConvergenceTrace t = unit_trace({rec(0, 1e-2, 1e-4), rec(1, 1e-3, 1e-5), rec(2, 1e-4, 1e-6)});
  EstimateSeries s;
  s.push(0, 1.1e-4 * 1.1e-4, 1.1e-4 * 1.1e-4);
  const UrValue u = uncertainty_ratio(t, s, 1, 1);
  EXPECT_NEAR(u.value, 990.0, 1e-9);
  EXPECT_EQ(u.included, 1u);
  EXPECT_EQ(u.skipped, 0u);
  // j = 2: |1e-4 - 1e-8| / |1.21e-8 - 1e-8|
  EXPECT_NEAR(uncertainty_ratio(t, s, 2, 1).value, (1e-4 - 1e-8) / 0.21e-8, 1e-3);
}

TEST(UncertaintyRatio, GuardSkipsExactEstimates) {
  const ConvergenceTrace t = unit_trace({rec(0, 1e-2, 1e-4), rec(1, 1e-3, 1e-5), rec(2, 1e-4, 1e-6), rec(3, 0, 0)});
  EstimateSeries s;
  s.push(0, 1e-8, 1e-8);  // chi = ||e|| exactly
  s.push(1, 4e-10, 4e-10);
  const UrValue u = uncertainty_ratio(t, s, 1, 1);
  EXPECT_EQ(u.skipped, 1u);
  EXPECT_EQ(u.included, 1u);
  EXPECT_NEAR(u.value, (1e-3 - 1e-5) / (2e-5 - 1e-5), 1e-6);
}

TEST(UncertaintyRatio, ResidualEqualsErrorGivesZero) {
  // A = I, b = x: r_k = e_k and ||b|| = ||x||, so every numerator vanishes
  const ConvergenceTrace t =
      unit_trace({rec(0, 0.5, 0.5), rec(1, 0.1, 0.1), rec(2, 3e-3, 3e-3), rec(3, 1e-5, 1e-5), rec(4, 1e-9, 1e-9)});
  EstimateSeries s;
  s.kind = EstimatorKind::bicgql_l2;
  for (std::size_t k = 0; k < 2; ++k) s.push(k, 4.0, 4.0);
  for (int j : {1, 2}) {
    const UrValue u = uncertainty_ratio(t, s, j, 2);
    EXPECT_EQ(u.value, 0.0);
    EXPECT_EQ(u.included, 2u);
  }
}

TEST(UncertaintyRatio, Errors) {
  const ConvergenceTrace t = unit_trace({rec(0, 1e-2, 1e-4), rec(1, 1e-3, 1e-5)});
  EstimateSeries s;
  EXPECT_THROW(uncertainty_ratio(t, s, 1, 1), InsufficientTrace);  // nothing valid
  EXPECT_THROW(uncertainty_ratio(t, s, 1, 2), InsufficientTrace);  // m <= d
  EXPECT_THROW(uncertainty_ratio(t, s, 3, 1), DomainError);
}

TEST(UncertaintyRatio, ScaleInvariantDefinition) {
  // scaling b and x0 by c scales every norm in the trace by c
  const double c = 3.7;
  ConvergenceTrace t = unit_trace({rec(0, 0.9, 0.7), rec(1, 0.2, 0.3), rec(2, 3e-2, 8e-2), rec(3, 1e-3, 5e-3)});
  t.b_norm = 1.3;
  t.x_true_norm = 0.6;
  EstimateSeries s;
  s.push(0, 0.5 * 0.5, 0.5 * 0.5);
  s.push(1, 0.25 * 0.25, 0.25 * 0.25);
  ConvergenceTrace u = t;
  u.b_norm *= c;
  u.x_true_norm *= c;
  for (IterationRecord& r : u.records) {
    r.res_norm *= c;
    r.true_err_norm *= c;
  }
  EstimateSeries v;
  v.push(0, c * c * 0.5 * 0.5, c * c * 0.5 * 0.5);
  v.push(1, c * c * 0.25 * 0.25, c * c * 0.25 * 0.25);
  const UrSample a = ur_sample(t, s, 2, 10), b = ur_sample(u, v, 2, 10);
  EXPECT_NEAR(a.ur1, b.ur1, 1e-10 * a.ur1);
  EXPECT_NEAR(a.ur2, b.ur2, 1e-10 * a.ur2);
  EXPECT_EQ(a.included, b.included);
}

TEST(UncertaintyRatio, ScaleInvariantSolverRun) {
  // power-of-two scaling is exact in binary floating point, so the whole run scales
  ProblemInstance p = generate_problem({60, 1e4, SpectrumKind::indefinite, 0.1, 21});
  EstimatorOptions eo;
  eo.d = 10;
  const EstimatedRun rp = run_estimated(p, SolverKind::bicg, EstimatorChoice::bicgql_l2, eo);
  const UrSample a = ur_sample(rp.trace, rp.primary, 10, 60);
  for (double c : {0.25, 4.0, 1024.0}) {
    ProblemInstance q = p;
    for (double& v : q.b) v *= c;
    for (double& v : q.x0) v *= c;
    q = make_problem(q.a, q.b, q.x0, "scaled");
    const EstimatedRun rq = run_estimated(q, SolverKind::bicg, EstimatorChoice::bicgql_l2, eo);
    const UrSample b = ur_sample(rq.trace, rq.primary, 10, 60);
    EXPECT_NEAR(a.ur1, b.ur1, 1e-10 * a.ur1) << c;
    EXPECT_NEAR(a.ur2, b.ur2, 1e-10 * a.ur2) << c;
    EXPECT_EQ(a.included, b.included) << c;
    EXPECT_EQ(a.iterations, b.iterations) << c;
  }
}

TEST(Theory, SpotValues) {
  EXPECT_NEAR(theory_expectations(100, 10, 1.0).e_ur2, 1.0 + std::log(90.0) / 9.0, 1e-12);
  const TheoryCurve c = theory_expectations(100, 10, 1e3);
  EXPECT_GT(c.e_ur1 / 1e3, 0.8 * std::sqrt(2.0 / 3.0));
  EXPECT_LT(c.e_ur1 / 1e3, 2.0 * std::sqrt(2.0 / 3.0));
  EXPECT_NEAR(theory_bounds(100, 0, 7.0, 1e-6).ub1, 14.0, 1e-12);
  EXPECT_NEAR(theory_bounds(100, 10, 10.0, 1e-6).ub1, 20.0 * std::pow(10.0, 1.2), 1e-9);
  EXPECT_NEAR(theory_bounds(100, 10, 10.0, 1e-6).ub2, 100.0 * std::pow(10.0, 1.2), 1e-9);
}

TEST(Theory, HomogeneousInKappaF) {
  for (std::size_t d : {1u, 5u, 30u}) {
    const TheoryCurve a = theory_expectations(100, d, 3.0), b = theory_expectations(100, d, 6.0);
    EXPECT_NEAR(b.e_ur1, 2.0 * a.e_ur1, 1e-12 * b.e_ur1);
    EXPECT_NEAR(b.e_ur2, 4.0 * a.e_ur2, 1e-12 * b.e_ur2);
  }
}

TEST(Theory, PositiveAndGrowing) {
  double prev1 = 0.0, prev2 = 0.0;
  for (std::size_t d = 1; d <= 50; ++d) {
    const TheoryCurve c = theory_expectations(100, d, 2.0);
    EXPECT_GT(c.e_ur1, 0.0);
    EXPECT_GT(c.e_ur2, prev2) << d;
    if (d > 1) {
      EXPECT_GT(c.e_ur1, prev1) << d;
    }
    prev1 = c.e_ur1;
    prev2 = c.e_ur2;
  }
  EXPECT_LT(theory_expectations(100, 10, 2.0).e_ur1, theory_expectations(100, 10, 2.5).e_ur1);
}

TEST(Theory, DomainChecks) {
  EXPECT_THROW(theory_expectations(100, 0, 1.0), DomainError);
  EXPECT_THROW(theory_expectations(100, 100, 1.0), DomainError);
  EXPECT_THROW(theory_bounds(100, 100, 1.0, 1e-6), DomainError);
  EXPECT_THROW(theory_bounds(100, 10, 1.0, 1.0), DomainError);
  EXPECT_TRUE(std::isfinite(theory_expectations(100, 50, 1e6).e_ur2));
  EXPECT_TRUE(std::isfinite(theory_bounds(100, 50, 1e6, 1e-6).ub2));
}

TEST(SlopeFit, RecoversKnownSlope) {
  std::vector<UrSample> s;
  for (double e = 1.0; e < 5.0; e += 0.25) s.push_back(sample(std::pow(10.0, e), 3.0 * std::pow(10.0, 0.8 * e)));
  const SlopeFit f = fit_decade_slope(s);
  ASSERT_TRUE(f.valid);
  EXPECT_NEAR(f.slope, 0.8, 1e-12);
  EXPECT_NEAR(f.intercept, std::log10(3.0), 1e-12);
  EXPECT_EQ(f.buckets.size(), 4u);
  const SlopeFit r = fit_decade_slope(s, 100.0, 1e4);
  EXPECT_EQ(r.buckets.size(), 2u);
}

TEST(SlopeFit, IgnoresFailuresAndNeedsTwoBuckets) {
  std::vector<UrSample> s{sample(20, 2), sample(30, 3)};
  EXPECT_FALSE(fit_decade_slope(s).valid);
  UrSample bad = sample(2000, 5);
  bad.status = "failed: x";
  s.push_back(bad);
  EXPECT_FALSE(fit_decade_slope(s).valid);
}

TEST(Sweep, DeterministicAndJobIndependent) {
  UrSweepConfig c;
  c.suite.matrices = kappa_ladder(40, 1.0, 3.0, 1.0, 2, SpectrumKind::indefinite, 0.1, 5);
  c.suite.rhs_per_matrix = 2;
  c.d = 5;
  c.jobs = 1;
  const UrSweepResult a = ur_sweep(c);
  c.jobs = 3;
  const UrSweepResult b = ur_sweep(c);
  ASSERT_EQ(a.samples.size(), 12u);
  ASSERT_EQ(b.samples.size(), a.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].label, b.samples[i].label);
    EXPECT_EQ(a.samples[i].ur1, b.samples[i].ur1);
    EXPECT_EQ(a.samples[i].ur2, b.samples[i].ur2);
  }
  EXPECT_EQ(a.fit.slope, b.fit.slope);
}

TEST(Sweep, WellConditionedSuiteStaysBelowThreshold) {
  UrSweepConfig c;
  c.suite.matrices = kappa_ladder(30, 0.0, 0.0, 1.0, 4, SpectrumKind::spd, 0.0, 8);
  c.solver = SolverKind::cg;
  c.estimator = EstimatorChoice::bicgql_l2;
  c.d = 3;
  const UrSweepResult r = ur_sweep(c);
  // residual and error coincide before convergence; afterwards the estimate
  // is far below the stagnated error and each term tends to 1
  ASSERT_EQ(r.samples.size(), 4u);
  for (const UrSample& s : r.samples) {
    ASSERT_EQ(s.status, "ok") << s.label;
    EXPECT_GE(s.ur1, 0.0) << s.label;
    EXPECT_LE(s.ur1, 1.0 + 1e-8) << s.label;
    EXPECT_LE(s.ur2, 1.0 + 1e-8) << s.label;
  }
}

TEST(Sweep, KappaLadderLayout) {
  const auto l = kappa_ladder(50, 1.5, 3.5, 0.5, 3, SpectrumKind::nonsym_posdef, 0.1, 1);
  ASSERT_EQ(l.size(), 15u);
  EXPECT_NEAR(l.front().kappa_target, std::pow(10.0, 1.5), 1e-9);
  EXPECT_NEAR(l.back().kappa_target, std::pow(10.0, 3.5), 1e-6);
  std::set<std::uint64_t> seeds;
  for (const auto& s : l) seeds.insert(s.seed);
  EXPECT_EQ(seeds.size(), l.size());
}

TEST(DelaySweep, HalfNDelayIsFinite) {
  DelaySweepConfig c;
  c.suite.matrices = kappa_ladder(20, 2.0, 2.0, 1.0, 2, SpectrumKind::nonsym_posdef, 0.1, 3);
  c.d_grid = {1, 10};
  c.stop_at_tol = false;
  const std::vector<DelayRow> rows = delay_sweep(c);
  ASSERT_EQ(rows.size(), 4u);
  for (const DelayRow& r : rows) {
    EXPECT_TRUE(std::isfinite(r.theory1_norm));
    EXPECT_TRUE(std::isfinite(r.bound2_norm));
    if (r.count > 0) {
      EXPECT_TRUE(std::isfinite(r.ur2_norm));
    }
  }
  c.d_grid = {11};
  EXPECT_THROW(delay_sweep(c), DomainError);
}

TEST(Bins, IdentityRunsAreExact) {
  // A = I: one CG step is exact, the d = 1 estimate equals ||e_0||
  ProblemInstance p = make_problem(DenseMatrix::identity(4), Vector{0, 1, 0, 0}, Vector(4, 0.0), "I");
  EstimatorOptions eo;
  eo.d = 1;
  const EstimatedRun run = run_estimated(p, SolverKind::bicg, EstimatorChoice::bicgql_l2, eo);
  const RelErrorSum e = relative_estimation_error(run.trace, run.primary);
  EXPECT_EQ(e.count, 1u);
  EXPECT_EQ(e.sum, 0.0);
}

TEST(Bins, LayoutAndWellConditionedBin) {
  BinConfig c;
  c.kappas = {1e1, 1e3};
  c.matrices_per_bin = 3;
  c.rhs_per_matrix = 3;
  c.n = 40;
  c.kind = SpectrumKind::spd;
  c.nonnormality = 0.0;
  const std::vector<BinRow> rows = bin_experiment(c);
  ASSERT_EQ(rows.size(), 2u);
  for (const BinRow& r : rows) {
    EXPECT_EQ(r.runs + r.failures, 9u);
    EXPECT_FALSE(r.empty);
    EXPECT_GE(r.mean_rel_error, 0.0);
  }
  EXPECT_LE(rows[0].mean_rel_error, 1.0);
  c.rhs_per_matrix = 41;
  EXPECT_THROW(bin_experiment(c), DomainError);
}

TEST(ParallelFor, VisitsEveryIndexOnceAndRethrows) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, 2,
                            [](std::size_t i) {
                              if (i == 7) throw DomainError("boom");
                            }),
               DomainError);
}
