#pragma once

/// \file kryest/urlab/sweep.hpp
/// \brief Condition-number sweeps, delay sweeps and the bin experiment over
/// generated problem suites.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "kryest/error.hpp"
#include "kryest/estimate/driver.hpp"
#include "kryest/matstore/problem.hpp"
#include "kryest/urlab/uncertainty_ratio.hpp"

namespace kryest {

/// Run f(i) for every i in [0, count) on up to `jobs` threads. f must only
/// write to slot i of its output, so results do not depend on scheduling.
template <class F>
void parallel_for(std::size_t count, unsigned jobs, F&& f) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<std::size_t>(jobs == 0 ? hw : jobs, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          f(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// 64-bit seed derived from a base seed and two indices.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/// Matrices and how many (b, x0) pairs to draw for each. Each matrix uses
/// one random stream seeded by its spec: the matrix, then b and x0 for
/// every right-hand side in turn (one rhs reproduces generate_problem).
struct SuiteSpec {
  std::vector<SpectrumSpec> matrices;
  std::size_t rhs_per_matrix = 1;
  bool zero_x0 = false;
};

/// Spectra with kappa(A) = 10^lo, 10^(lo+step), ..., 10^hi, `per_level`
/// matrices each, seeds derived from `seed`.
inline std::vector<SpectrumSpec> kappa_ladder(std::size_t n, double lo, double hi, double step, std::size_t per_level,
                                              SpectrumKind kind, double nonnormality, std::uint64_t seed) {
  if (!(step > 0.0) || hi < lo) throw DomainError("kappa_ladder: bad exponent range");
  std::vector<SpectrumSpec> out;
  std::size_t level = 0;
  for (double e = lo; e <= hi + 1e-9; e += step, ++level)
    for (std::size_t i = 0; i < per_level; ++i)
      out.push_back({n, std::pow(10.0, e), kind, nonnormality, mix_seed(seed, level, i)});
  return out;
}

namespace detail {

inline std::vector<ProblemInstance> suite_problems(const SpectrumSpec& spec, std::size_t rhs, bool zero_x0) {
  std::mt19937_64 rng(spec.seed);
  const DenseMatrix a = generate_matrix(spec, rng);
  std::vector<ProblemInstance> out;
  for (std::size_t r = 0; r < rhs; ++r) {
    Vector b = random_unit_vector(spec.n, rng);
    Vector x0 = random_unit_vector(spec.n, rng);
    if (zero_x0) std::fill(x0.begin(), x0.end(), 0.0);
    std::string label = spec_label(spec) + ",rhs=" + std::to_string(r);
    try {
      out.push_back(make_problem(a, std::move(b), std::move(x0), std::move(label)));
    } catch (const SingularMatrix& e) {
      throw GenerationError(std::string("suite: ") + e.what());
    }
  }
  return out;
}

inline bool symmetric_positive(const DenseMatrix& a) {
  if (a.asymmetry() != 0.0) return false;
  return symmetric_eigen_extremes(a).first > 0.0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// condition-number sweep

struct UrBucket {
  int decade = 0;  ///< floor(log10 kappa)
  std::size_t count = 0;
  double kappa_gmean = kNaN;
  double ur_gmean = kNaN;
};

/// Least-squares line through (log10 kappa_gmean, log10 ur_gmean) of the
/// decade buckets.
struct SlopeFit {
  bool valid = false;
  double slope = kNaN;
  double intercept = kNaN;
  std::vector<UrBucket> buckets;
};

/// Bucket the samples by decade of kappa(A,x), restricted to
/// [kappa_lo, kappa_hi), and fit log U.R.^(1) against log kappa.
inline SlopeFit fit_decade_slope(const std::vector<UrSample>& samples, double kappa_lo = 0.0,
                                 double kappa_hi = std::numeric_limits<double>::infinity()) {
  std::map<int, UrBucket> by;
  std::map<int, std::pair<double, double>> logs;
  for (const UrSample& s : samples) {
    if (s.status != "ok" || !(s.ur1 > 0.0) || !std::isfinite(s.ur1)) continue;
    if (!(s.kappa_forward >= kappa_lo && s.kappa_forward < kappa_hi)) continue;
    const int dec = static_cast<int>(std::floor(std::log10(s.kappa_forward)));
    UrBucket& b = by[dec];
    b.decade = dec;
    ++b.count;
    logs[dec].first += std::log10(s.kappa_forward);
    logs[dec].second += std::log10(s.ur1);
  }
  SlopeFit fit;
  std::vector<double> xs, ys;
  for (auto& [dec, b] : by) {
    const double c = static_cast<double>(b.count);
    b.kappa_gmean = std::pow(10.0, logs[dec].first / c);
    b.ur_gmean = std::pow(10.0, logs[dec].second / c);
    xs.push_back(logs[dec].first / c);
    ys.push_back(logs[dec].second / c);
    fit.buckets.push_back(b);
  }
  if (xs.size() < 2) return fit;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(ys.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (!(sxx > 0.0)) return fit;
  fit.valid = true;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

struct UrSweepConfig {
  SuiteSpec suite;
  SolverKind solver = SolverKind::bicg;
  EstimatorChoice estimator = EstimatorChoice::bicgql_l2;
  std::size_t d = 10;
  std::optional<double> stop_tol;  ///< stop once ||e_k||/||x|| <= tol; default runs to max_it = n
  XNormSource xnorm = XNormSource::oracle;
  double fit_kappa_lo = 0.0;
  double fit_kappa_hi = std::numeric_limits<double>::infinity();
  unsigned jobs = 1;
};

struct UrSweepResult {
  std::vector<UrSample> samples;  ///< matrix-major, rhs-minor
  SlopeFit fit;
  std::size_t failures = 0;
};

namespace detail {

/// One U.R. sample; failures are returned as a sample with a status.
inline UrSample ur_run(const ProblemInstance& p, SolverKind solver, EstimatorChoice est, std::size_t d,
                       std::optional<double> stop_tol, XNormSource xnorm) {
  UrSample s;
  s.label = p.label;
  s.d = d;
  s.n = p.n();
  try {
    const ConditionReport c = condition_report(p);
    s.kappa_f_forward = c.kappa_f_forward;
    s.kappa_forward = c.kappa_forward;
    EstimatorOptions eo;
    eo.d = d;
    // A-norm estimates are plotted against the A-norm kappa(A,x) where defined
    if ((est == EstimatorChoice::cgql || est == EstimatorChoice::bicgql_anorm) && symmetric_positive(p.a))
      s.kappa_forward = kappa_forward_anorm(p);
    StopCheck stop;
    if (stop_tol) {
      const double lim = *stop_tol * nrm2(*p.x_true);
      stop = [lim](const IterationRecord& r, const EstimateSeries&) {
        return r.true_err_norm <= lim ? Control::stop : Control::proceed;
      };
    }
    const EstimatedRun run = run_estimated(p, solver, est, eo, SolveOptions{}, stop);
    const UrSample u = ur_sample(run.trace, run.primary, d, p.n(), xnorm);
    s.ur1 = u.ur1;
    s.ur2 = u.ur2;
    s.iterations = u.iterations;
    s.included = u.included;
    s.skipped_iterations = u.skipped_iterations;
  } catch (const std::exception& e) {
    s.status = std::string("failed: ") + e.what();
  }
  return s;
}

}  // namespace detail

/// One U.R. sample per (matrix, rhs). Failed runs stay in the list with a
/// status and are left out of the fit.
inline UrSweepResult ur_sweep(const UrSweepConfig& cfg) {
  if (!compatible(cfg.solver, cfg.estimator))
    throw DomainError("ur_sweep: estimator " + to_string(cfg.estimator) + " does not fit solver " +
                      to_string(cfg.solver));
  const std::size_t nm = cfg.suite.matrices.size(), nr = cfg.suite.rhs_per_matrix;
  std::vector<std::vector<UrSample>> per(nm);
  parallel_for(nm, cfg.jobs, [&](std::size_t i) {
    const SpectrumSpec& spec = cfg.suite.matrices[i];
    try {
      for (const ProblemInstance& p : detail::suite_problems(spec, nr, cfg.suite.zero_x0))
        per[i].push_back(detail::ur_run(p, cfg.solver, cfg.estimator, cfg.d, cfg.stop_tol, cfg.xnorm));
    } catch (const std::exception& e) {
      per[i].clear();
      for (std::size_t r = 0; r < nr; ++r) {
        UrSample s;
        s.label = spec_label(spec) + ",rhs=" + std::to_string(r);
        s.d = cfg.d;
        s.n = spec.n;
        s.status = std::string("failed: ") + e.what();
        per[i].push_back(s);
      }
    }
  });
  UrSweepResult out;
  for (auto& v : per)
    for (auto& s : v) {
      if (s.status != "ok") ++out.failures;
      out.samples.push_back(std::move(s));
    }
  out.fit = fit_decade_slope(out.samples, cfg.fit_kappa_lo, cfg.fit_kappa_hi);
  return out;
}

// ---------------------------------------------------------------------------
// delay sweep

struct DelaySweepConfig {
  SuiteSpec suite;
  std::vector<std::size_t> d_grid{1, 5, 10, 20, 30};
  std::vector<SolverKind> solvers{SolverKind::bicg, SolverKind::gmres};
  double tol = 1e-6;         ///< tolerance E for the bound, and for the stop
  bool stop_at_tol = true;   ///< stop each run once ||e_k||/||x|| <= E
  unsigned jobs = 1;
};

/// Mean U.R.^(1)/kF and U.R.^(2)/kF^2 at one (solver, d), next to the
/// expectation and the mean bound on the same scale.
struct DelayRow {
  SolverKind solver = SolverKind::bicg;
  EstimatorChoice estimator = EstimatorChoice::bicgql_l2;
  std::size_t d = 0, n = 0;
  std::size_t count = 0, failures = 0;
  double ur1_norm = kNaN, ur2_norm = kNaN;
  double theory1_norm = kNaN, theory2_norm = kNaN;
  double bound1_norm = kNaN, bound2_norm = kNaN;
};

inline std::vector<DelayRow> delay_sweep(const DelaySweepConfig& cfg) {
  if (cfg.suite.matrices.empty()) throw DomainError("delay_sweep: empty suite");
  const std::size_t n = cfg.suite.matrices.front().n;
  for (const SpectrumSpec& s : cfg.suite.matrices)
    if (s.n != n) throw DomainError("delay_sweep: all matrices must share n");
  for (std::size_t d : cfg.d_grid)
    if (d < 1 || 2 * d > n) throw DomainError("delay_sweep: d must lie in [1, n/2]");

  std::vector<ProblemInstance> probs;
  std::vector<std::string> gen_fail;
  for (const SpectrumSpec& s : cfg.suite.matrices) {
    try {
      for (auto& p : detail::suite_problems(s, cfg.suite.rhs_per_matrix, cfg.suite.zero_x0))
        probs.push_back(std::move(p));
    } catch (const GenerationError& e) {
      gen_fail.push_back(e.what());
    }
  }
  std::vector<ConditionReport> cond(probs.size());
  std::vector<bool> cond_ok(probs.size(), false);
  parallel_for(probs.size(), cfg.jobs, [&](std::size_t i) {
    try {
      cond[i] = condition_report(probs[i]);
      cond_ok[i] = true;
    } catch (const std::exception&) {
    }
  });

  std::vector<DelayRow> rows;
  for (SolverKind solver : cfg.solvers) {
    const EstimatorChoice est = default_estimator(solver);
    for (std::size_t d : cfg.d_grid) {
      std::vector<UrSample> s(probs.size());
      std::optional<double> stop;
      if (cfg.stop_at_tol) stop = cfg.tol;
      parallel_for(probs.size(), cfg.jobs, [&](std::size_t i) {
        if (!cond_ok[i]) {
          s[i].status = "failed: condition";
          return;
        }
        s[i] = detail::ur_run(probs[i], solver, est, d, stop, XNormSource::oracle);
      });
      DelayRow row;
      row.solver = solver;
      row.estimator = est;
      row.d = d;
      row.n = n;
      row.failures = gen_fail.size() * cfg.suite.rhs_per_matrix;
      double u1 = 0.0, u2 = 0.0, b1 = 0.0, b2 = 0.0;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        if (s[i].status != "ok") {
          ++row.failures;
          continue;
        }
        const double kf = cond[i].kappa_f_forward;
        const TheoryBounds tb = theory_bounds(n, d, cond[i].kappa_forward, cfg.tol);
        u1 += s[i].ur1 / kf;
        u2 += s[i].ur2 / (kf * kf);
        b1 += tb.ub1 / kf;
        b2 += tb.ub2 / (kf * kf);
        ++row.count;
      }
      const TheoryCurve tc = theory_expectations(n, d, 1.0);
      row.theory1_norm = tc.e_ur1;
      row.theory2_norm = tc.e_ur2;
      if (row.count > 0) {
        const double c = static_cast<double>(row.count);
        row.ur1_norm = u1 / c;
        row.ur2_norm = u2 / c;
        row.bound1_norm = b1 / c;
        row.bound2_norm = b2 / c;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// bin experiment

/// Sum and count of |chi_k - ||e_k||| / ||e_k|| over the valid points of a
/// run with ||e_k|| > 0.
struct RelErrorSum {
  double sum = 0.0;
  std::size_t count = 0;
};

inline RelErrorSum relative_estimation_error(const ConvergenceTrace& t, const EstimateSeries& s) {
  RelErrorSum r;
  for (const EstimatePoint& pt : s.points) {
    if (!pt.valid() || pt.k >= t.records.size()) continue;
    const double e = s.anorm() ? std::sqrt(t.records[pt.k].true_err_anorm_sq) : t.records[pt.k].true_err_norm;
    if (!(e > 0.0)) continue;
    r.sum += std::abs(pt.chi - e) / e;
    ++r.count;
  }
  return r;
}

struct BinConfig {
  std::vector<double> kappas{1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
  std::size_t matrices_per_bin = 10;
  std::size_t rhs_per_matrix = 10;
  std::size_t n = 100;
  std::size_t d = 10;
  SolverKind solver = SolverKind::bicg;
  SpectrumKind kind = SpectrumKind::nonsym_posdef;
  double nonnormality = 0.1;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct BinRow {
  double kappa = kNaN;
  std::size_t runs = 0, failures = 0, points = 0;
  double mean_rel_error = kNaN;
  bool empty = true;
};

/// Mean relative l2 estimation error per condition-number bin. Each matrix
/// gets `rhs_per_matrix` distinct canonical basis vectors as b, x0 = 0, and
/// every run goes to max_it = n.
inline std::vector<BinRow> bin_experiment(const BinConfig& cfg) {
  if (cfg.rhs_per_matrix > cfg.n) throw DomainError("bin_experiment: more right-hand sides than canonical vectors");
  const std::size_t nb = cfg.kappas.size(), nm = cfg.matrices_per_bin;
  struct Cell {
    RelErrorSum acc;
    std::size_t runs = 0, failures = 0;
  };
  std::vector<Cell> cells(nb * nm);
  parallel_for(cells.size(), cfg.jobs, [&](std::size_t idx) {
    const std::size_t bin = idx / nm, m = idx % nm;
    Cell& cell = cells[idx];
    const SpectrumSpec spec{cfg.n, cfg.kappas[bin], cfg.kind, cfg.nonnormality, mix_seed(cfg.seed, bin, m)};
    std::mt19937_64 rng(spec.seed);
    DenseMatrix a;
    try {
      a = generate_matrix(spec, rng);
    } catch (const std::exception&) {
      cell.failures = cfg.rhs_per_matrix;
      return;
    }
    std::vector<std::size_t> cols(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) cols[i] = i;
    std::shuffle(cols.begin(), cols.end(), rng);
    for (std::size_t r = 0; r < cfg.rhs_per_matrix; ++r) {
      Vector b(cfg.n, 0.0);
      b[cols[r]] = 1.0;
      try {
        const ProblemInstance p = make_problem(a, std::move(b), Vector(cfg.n, 0.0), spec_label(spec));
        EstimatorOptions eo;
        eo.d = cfg.d;
        const EstimatedRun run = run_estimated(p, cfg.solver, default_estimator(cfg.solver), eo);
        const RelErrorSum e = relative_estimation_error(run.trace, run.primary);
        cell.acc.sum += e.sum;
        cell.acc.count += e.count;
        ++cell.runs;
      } catch (const std::exception&) {
        ++cell.failures;
      }
    }
  });
  std::vector<BinRow> rows(nb);
  for (std::size_t bin = 0; bin < nb; ++bin) {
    BinRow& row = rows[bin];
    row.kappa = cfg.kappas[bin];
    double sum = 0.0;
    for (std::size_t m = 0; m < nm; ++m) {
      const Cell& c = cells[bin * nm + m];
      row.runs += c.runs;
      row.failures += c.failures;
      row.points += c.acc.count;
      sum += c.acc.sum;
    }
    row.empty = row.points == 0;
    if (!row.empty) row.mean_rel_error = sum / static_cast<double>(row.points);
  }
  return rows;
}

}  // namespace kryest
