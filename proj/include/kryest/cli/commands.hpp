#pragma once

/// \file kryest/cli/commands.hpp
/// \brief The experiment commands behind the `kryest` tool. Each command
/// writes one CSV table and returns a process exit code.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kryest/cli/csv.hpp"
#include "kryest/error.hpp"
#include "kryest/estimate/driver.hpp"
#include "kryest/matstore/matrix_market.hpp"
#include "kryest/matstore/problem.hpp"
#include "kryest/stopcrit/accounting.hpp"
#include "kryest/stopcrit/policy.hpp"
#include "kryest/urlab/sweep.hpp"
#include "kryest/urlab/uncertainty_ratio.hpp"

namespace kryest::cli {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int io = 3;
inline constexpr int numerical = 4;
inline constexpr int partial = 5;
}  // namespace exit_code

/// CSV flag bits for missing values (estimator flags use the low bits).
namespace csv_flags {
inline constexpr std::uint32_t missing_a = 32u;
inline constexpr std::uint32_t missing_b = 64u;
inline constexpr std::uint32_t missing_c = 128u;
}  // namespace csv_flags

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"solve", "estimate", "ur-sweep", "delay-sweep", "bins", "stop-compare"};
  return names;
}

struct RunConfig {
  std::string command;
  std::optional<std::string> matrix_path;
  std::optional<std::string> rhs_path;
  std::optional<std::string> gen;  ///< "n,kappa,kind,nonnormality"
  SolverKind solver = SolverKind::bicg;
  std::optional<EstimatorChoice> estimator;
  std::size_t d = 10;
  double tol = 1e-6;
  bool tol_given = false;
  std::size_t max_it = 0;
  std::uint64_t seed = 1;
  std::string out;  ///< empty: stdout
  unsigned jobs = 1;
  bool zero_x0 = false;

  // suites
  std::size_t n = 100;
  std::string kind = "indefinite";
  double nonnormality = 0.1;
  std::vector<double> kappa_exp{1.5, 5.5, 0.5};  ///< lo, hi, step of log10 kappa(A)
  std::size_t per_level = 8;
  std::size_t rhs = 1;
  std::vector<std::size_t> d_grid{1, 5, 10, 20, 30};
  std::vector<double> tol_grid{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  std::optional<double> stop_tol;
  std::vector<double> fit_range{10.0, 1e5};
  std::vector<double> bin_kappas{1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
  std::size_t matrices = 10;

  EstimatorChoice estimator_or_default() const { return estimator.value_or(default_estimator(solver)); }

  void validate() const {
    bool known = false;
    for (const auto& c : command_names()) known = known || c == command;
    if (!known) throw DomainError("unknown command '" + command + "'");
    const bool needs_problem = command == "solve" || command == "estimate" || command == "stop-compare";
    if (needs_problem && (matrix_path.has_value() == gen.has_value()))
      throw DomainError("exactly one of --matrix and --gen is required");
    if (!needs_problem && (matrix_path || gen)) throw DomainError(command + " builds its own suite; drop --matrix/--gen");
    if (rhs_path && !matrix_path) throw DomainError("--rhs needs --matrix");
    if (d < 1) throw DomainError("--d must be >= 1");
    if (!(tol > 0.0 && tol <= 1.0)) throw DomainError("--tol must lie in (0, 1]");
    for (double t : tol_grid)
      if (!(t > 0.0 && t <= 1.0)) throw DomainError("--tol-grid entries must lie in (0, 1]");
    if (kappa_exp.size() != 3 || !(kappa_exp[2] > 0.0) || kappa_exp[1] < kappa_exp[0])
      throw DomainError("--kappa-exp needs LO,HI,STEP with LO <= HI and STEP > 0");
    if (fit_range.size() != 2 || !(fit_range[0] < fit_range[1])) throw DomainError("--fit-range needs LO,HI with LO < HI");
    if (stop_tol && !(*stop_tol > 0.0 && *stop_tol < 1.0)) throw DomainError("--stop-tol must lie in (0, 1)");
    if (n < 2) throw DomainError("--n must be >= 2");
    if (per_level < 1 || rhs < 1 || matrices < 1) throw DomainError("suite counts must be >= 1");
    if (estimator && (command == "solve" || command == "estimate" || command == "stop-compare" || command == "ur-sweep") &&
        !compatible(solver, *estimator))
      throw DomainError("estimator " + to_string(*estimator) + " does not run on solver " + to_string(solver));
    parse_spectrum_kind(kind);
  }
};

/// "n,kappa,kind,nonnormality" -> SpectrumSpec (seed filled by the caller).
inline SpectrumSpec parse_gen(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  if (parts.size() != 4) throw DomainError("--gen expects n,kappa,kind,nonnormality; got '" + s + "'");
  SpectrumSpec spec;
  try {
    std::size_t pos = 0;
    const long long n = std::stoll(parts[0], &pos);
    if (pos != parts[0].size() || n < 1) throw DomainError("");
    spec.n = static_cast<std::size_t>(n);
    spec.kappa_target = std::stod(parts[1], &pos);
    if (pos != parts[1].size()) throw DomainError("");
    spec.nonnormality = std::stod(parts[3], &pos);
    if (pos != parts[3].size()) throw DomainError("");
  } catch (const std::exception&) {
    throw DomainError("--gen: cannot parse '" + s + "'");
  }
  spec.kind = parse_spectrum_kind(parts[2]);
  return spec;
}

/// The single problem of solve / estimate / stop-compare. A matrix file
/// without --rhs gets a random unit b from --seed; x0 is random unit as
/// well unless --zero-x0.
inline ProblemInstance load_problem(const RunConfig& cfg) {
  if (cfg.gen) {
    SpectrumSpec spec = parse_gen(*cfg.gen);
    spec.seed = cfg.seed;
    ProblemInstance p = generate_problem(spec);
    if (cfg.zero_x0) std::fill(p.x0.begin(), p.x0.end(), 0.0);
    return p;
  }
  DenseMatrix a = mm_read(*cfg.matrix_path);
  if (!a.square()) throw StructuralError(*cfg.matrix_path + ": matrix is not square");
  std::mt19937_64 rng(cfg.seed);
  Vector b = cfg.rhs_path ? mm_read_vector(*cfg.rhs_path) : random_unit_vector(a.rows(), rng);
  if (b.size() != a.rows()) throw StructuralError("right-hand side length does not match the matrix");
  Vector x0 = cfg.zero_x0 ? Vector(a.rows(), 0.0) : random_unit_vector(a.rows(), rng);
  return make_problem(std::move(a), std::move(b), std::move(x0), *cfg.matrix_path);
}

inline EstimatorOptions estimator_options(const RunConfig& cfg, const ProblemInstance& p) {
  EstimatorOptions eo;
  eo.d = cfg.d;
  // the harness supplies exact spectral bounds to the Radau rules
  if (cfg.estimator_or_default() == EstimatorChoice::cgql && cfg.solver == SolverKind::cg) {
    const auto [lmin, lmax] = symmetric_eigen_extremes(p.a);
    if (lmin > 0.0) {
      eo.lambda_min = lmin * (1.0 - 1e-12);
      eo.lambda_max = lmax * (1.0 + 1e-12);
    }
  }
  return eo;
}

// ---------------------------------------------------------------------------

inline const char* solve_schema() {
  return "solve: k,res_rel,true_res_rel,err_rel,x_norm,alpha,beta,flags\n"
         "  one row per iterate k = 0..m; flags: 32 alpha/beta missing, 64 true residual missing,\n"
         "  128 oracle error missing";
}

inline int cmd_solve(const RunConfig& cfg, std::ostream& out) {
  const ProblemInstance p = load_problem(cfg);
  SolveOptions opt;
  opt.max_it = cfg.max_it;
  if (cfg.tol_given) opt.tol = cfg.tol;
  const EstimatedRun run = run_estimated(p, cfg.solver, std::nullopt, {}, opt);
  const ConvergenceTrace& t = run.trace;
  CsvWriter w(out, {"k", "res_rel", "true_res_rel", "err_rel", "x_norm", "alpha", "beta", "flags"});
  for (const IterationRecord& r : t.records) {
    std::uint32_t f = 0;
    if (std::isnan(r.alpha) || std::isnan(r.beta)) f |= csv_flags::missing_a;
    if (std::isnan(r.true_res_norm)) f |= csv_flags::missing_b;
    if (std::isnan(r.true_err_norm)) f |= csv_flags::missing_c;
    w.integer(static_cast<long long>(r.k))
        .num(r.res_norm / t.b_norm)
        .num(r.true_res_norm / t.b_norm)
        .num(r.true_err_norm / t.x_true_norm)
        .num(r.x_norm)
        .num(r.alpha)
        .num(r.beta)
        .integer(f);
    w.end_row();
  }
  return exit_code::ok;
}

inline const char* estimate_schema() {
  return "estimate: k,res_rel,err_rel,est_rel,est_alt_rel,s_norm,trigger,flags\n"
         "  one row per iteration k = 1..m; err_rel and est_rel use the estimator's norm (A-norm\n"
         "  estimators: ||e_k||_A/||x||_A) and the true ||x||; est_alt_rel is the other GMRES variant or\n"
         "  the CGQL Radau upper bound; s_norm and trigger are GMRES only. flags: estimator bits\n"
         "  (1 partial window, 2 negative, 4 withheld, 8 trigger, 16 negative offset) plus 32 est_rel\n"
         "  missing, 64 est_alt_rel missing, 128 s_norm missing";
}

inline int cmd_estimate(const RunConfig& cfg, std::ostream& out) {
  const ProblemInstance p = load_problem(cfg);
  const EstimatorChoice est = cfg.estimator_or_default();
  SolveOptions opt;
  opt.max_it = cfg.max_it;
  if (cfg.tol_given) opt.tol = cfg.tol;
  const EstimatedRun run = run_estimated(p, cfg.solver, est, estimator_options(cfg, p), opt);
  const ConvergenceTrace& t = run.trace;
  const bool anorm = run.primary.anorm();
  const double xn = anorm ? t.x_true_anorm : t.x_true_norm;

  const EstimateSeries* alt = nullptr;
  if (est == EstimatorChoice::gmres_original) alt = &run.all[1];
  if (est == EstimatorChoice::gmres_modified) alt = &run.all[0];
  if (est == EstimatorChoice::cgql && run.all.size() > 1) alt = &run.all[1];

  CsvWriter w(out, {"k", "res_rel", "err_rel", "est_rel", "est_alt_rel", "s_norm", "trigger", "flags"});
  for (std::size_t k = 1; k < t.records.size(); ++k) {
    const IterationRecord& r = t.records[k];
    const double err = anorm ? std::sqrt(r.true_err_anorm_sq) : r.true_err_norm;
    const EstimatePoint* pt = run.primary.at(k);
    const EstimatePoint* pa = alt ? alt->at(k) : nullptr;
    const double s_norm = k < run.s_norms.size() ? run.s_norms[k] : kNaN;
    const bool trig = run.trigger_step && k >= *run.trigger_step;
    std::uint32_t f = pt ? pt->flags : 0u;
    const double e1 = pt && pt->valid() ? pt->chi / xn : kNaN;
    const double e2 = pa && pa->valid() ? pa->chi / xn : kNaN;
    if (std::isnan(e1)) f |= csv_flags::missing_a;
    if (std::isnan(e2)) f |= csv_flags::missing_b;
    if (std::isnan(s_norm)) f |= csv_flags::missing_c;
    w.integer(static_cast<long long>(k))
        .num(r.res_norm / t.b_norm)
        .num(err / xn)
        .num(e1)
        .num(e2)
        .num(s_norm)
        .integer(trig ? 1 : 0)
        .integer(f);
    w.end_row();
  }
  return exit_code::ok;
}

// ---------------------------------------------------------------------------

inline SuiteSpec suite_from(const RunConfig& cfg, SpectrumKind kind) {
  SuiteSpec s;
  s.matrices = kappa_ladder(cfg.n, cfg.kappa_exp[0], cfg.kappa_exp[1], cfg.kappa_exp[2], cfg.per_level, kind,
                            kind == SpectrumKind::spd ? 0.0 : cfg.nonnormality, cfg.seed);
  s.rhs_per_matrix = cfg.rhs;
  s.zero_x0 = cfg.zero_x0;
  return s;
}

/// Exit code for a table with `failed` of `total` rows failed.
inline int partial_code(std::size_t failed, std::size_t total) {
  return (total > 0 && 10 * failed > total) ? exit_code::partial : exit_code::ok;
}

inline const char* ur_sweep_schema() {
  return "ur-sweep: index,label,kappa_fwd,kappa_f_fwd,ur1,ur2,e_ur1,e_ur2,d,n,iterations,included,skipped,"
         "above_threshold,status\n"
         "  one row per (matrix, rhs); e_ur1/e_ur2 are the expected ratios for the row's kappa_F;\n"
         "  above_threshold is 1 when ur1 > 1. Footer comment: fitted log-log slope over decade buckets";
}

inline int cmd_ur_sweep(const RunConfig& cfg, std::ostream& out) {
  UrSweepConfig sc;
  const SpectrumKind kind = parse_spectrum_kind(cfg.kind);
  sc.suite = suite_from(cfg, kind);
  sc.solver = cfg.solver;
  sc.estimator = cfg.estimator_or_default();
  sc.d = cfg.d;
  sc.stop_tol = cfg.stop_tol;
  sc.fit_kappa_lo = cfg.fit_range[0];
  sc.fit_kappa_hi = cfg.fit_range[1];
  sc.jobs = cfg.jobs;
  const UrSweepResult res = ur_sweep(sc);
  CsvWriter w(out, {"index", "label", "kappa_fwd", "kappa_f_fwd", "ur1", "ur2", "e_ur1", "e_ur2", "d", "n",
                    "iterations", "included", "skipped", "above_threshold", "status"});
  for (std::size_t i = 0; i < res.samples.size(); ++i) {
    const UrSample& s = res.samples[i];
    TheoryCurve tc;
    if (s.status == "ok" && s.d < s.n) tc = theory_expectations(s.n, s.d, s.kappa_f_forward);
    w.integer(static_cast<long long>(i))
        .text(s.label)
        .num(s.kappa_forward)
        .num(s.kappa_f_forward)
        .num(s.ur1)
        .num(s.ur2)
        .num(tc.e_ur1)
        .num(tc.e_ur2)
        .integer(static_cast<long long>(s.d))
        .integer(static_cast<long long>(s.n))
        .integer(static_cast<long long>(s.iterations))
        .integer(static_cast<long long>(s.included))
        .integer(static_cast<long long>(s.skipped_iterations))
        .integer(s.ur1 > 1.0 ? 1 : 0)
        .text(s.status);
    w.end_row();
  }
  std::ostringstream foot;
  foot << "slope=" << format_double(res.fit.slope) << ",intercept=" << format_double(res.fit.intercept)
       << ",buckets=" << res.fit.buckets.size() << ",fit_kappa_lo=" << format_double(sc.fit_kappa_lo)
       << ",fit_kappa_hi=" << format_double(sc.fit_kappa_hi) << ",failures=" << res.failures;
  w.comment(foot.str());
  return partial_code(res.failures, res.samples.size());
}

inline const char* delay_sweep_schema() {
  return "delay-sweep: solver,estimator,d,d_over_n,n,count,failures,ur1_norm,ur2_norm,theory1_norm,"
         "theory2_norm,bound1_norm,bound2_norm\n"
         "  one row per (solver, d); *_norm are U.R.^(1)/kappa_F and U.R.^(2)/kappa_F^2 (means over the\n"
         "  suite), the expected values and the mean bounds at tolerance --tol";
}

inline int cmd_delay_sweep(const RunConfig& cfg, std::ostream& out) {
  DelaySweepConfig dc;
  dc.suite = suite_from(cfg, parse_spectrum_kind(cfg.kind));
  dc.d_grid = cfg.d_grid;
  dc.tol = cfg.tol;
  dc.jobs = cfg.jobs;
  const std::vector<DelayRow> rows = delay_sweep(dc);
  CsvWriter w(out, {"solver", "estimator", "d", "d_over_n", "n", "count", "failures", "ur1_norm", "ur2_norm",
                    "theory1_norm", "theory2_norm", "bound1_norm", "bound2_norm"});
  std::size_t failed = 0, total = 0;
  for (const DelayRow& r : rows) {
    failed += r.failures;
    total += r.failures + r.count;
    w.text(to_string(r.solver))
        .text(to_string(r.estimator))
        .integer(static_cast<long long>(r.d))
        .num(static_cast<double>(r.d) / static_cast<double>(r.n))
        .integer(static_cast<long long>(r.n))
        .integer(static_cast<long long>(r.count))
        .integer(static_cast<long long>(r.failures))
        .num(r.ur1_norm)
        .num(r.ur2_norm)
        .num(r.theory1_norm)
        .num(r.theory2_norm)
        .num(r.bound1_norm)
        .num(r.bound2_norm);
    w.end_row();
  }
  return partial_code(failed, total);
}

inline const char* bins_schema() {
  return "bins: kappa,runs,failures,points,mean_rel_error,status\n"
         "  one row per condition-number bin; mean_rel_error averages |f_k - ||e_k||| / ||e_k|| over all\n"
         "  estimates of all runs; status is ok or empty";
}

inline int cmd_bins(const RunConfig& cfg, std::ostream& out) {
  BinConfig bc;
  bc.kappas = cfg.bin_kappas;
  bc.matrices_per_bin = cfg.matrices;
  bc.rhs_per_matrix = cfg.rhs;
  bc.n = cfg.n;
  bc.d = cfg.d;
  bc.solver = cfg.solver;
  bc.kind = parse_spectrum_kind(cfg.kind);
  bc.nonnormality = bc.kind == SpectrumKind::spd ? 0.0 : cfg.nonnormality;
  bc.seed = cfg.seed;
  bc.jobs = cfg.jobs;
  if (bc.solver == SolverKind::gmres) throw DomainError("bins uses the BiCGQL l2 estimator: choose --solver bicg or cg");
  const std::vector<BinRow> rows = bin_experiment(bc);
  CsvWriter w(out, {"kappa", "runs", "failures", "points", "mean_rel_error", "status"});
  std::size_t failed = 0, total = 0;
  for (const BinRow& r : rows) {
    failed += r.failures;
    total += r.failures + r.runs;
    w.num(r.kappa)
        .integer(static_cast<long long>(r.runs))
        .integer(static_cast<long long>(r.failures))
        .integer(static_cast<long long>(r.points))
        .num(r.mean_rel_error)
        .text(r.empty ? "empty" : "ok");
    w.end_row();
  }
  return partial_code(failed, total);
}

inline const char* stop_compare_schema() {
  return "stop-compare: tol,policy,stop_index,satisfied,i_res,i_est,i_true,accuracy_loss,computation_loss,"
         "delta_rel,flags\n"
         "  one row per (tol, policy in residual/estimator/oracle); stop_index is where that policy halted\n"
         "  the solver; the accounting columns come from one full run and repeat across policies.\n"
         "  flags: 1 i_res, 2 i_est, 4 i_true not reached, 8 losses undefined, 16 policy not satisfied";
}

inline int cmd_stop_compare(const RunConfig& cfg, std::ostream& out) {
  const ProblemInstance p = load_problem(cfg);
  const EstimatorChoice est = cfg.estimator_or_default();
  SolveOptions opt;
  opt.max_it = cfg.max_it;
  EstimatorOptions eo = estimator_options(cfg, p);
  eo.finalize_exact_tail = false;
  const EstimatedRun full = run_estimated(p, cfg.solver, est, eo, opt);
  const std::vector<double> tols = cfg.tol_given ? std::vector<double>{cfg.tol} : cfg.tol_grid;

  CsvWriter w(out, {"tol", "policy", "stop_index", "satisfied", "i_res", "i_est", "i_true", "accuracy_loss",
                    "computation_loss", "delta_rel", "flags"});
  for (double tol : tols) {
    const StopAccounting a = stop_accounting(full.trace, full.primary, tol, p.n());
    for (PolicyKind kind :
         {PolicyKind::relative_residual, PolicyKind::estimator_relative_error, PolicyKind::oracle_relative_error}) {
      StoppingPolicy pol;
      pol.kind = kind;
      pol.tol = tol;
      pol.estimator = est;
      const PolicyRun pr = run_with_policy(p, cfg.solver, pol, cfg.d, cfg.max_it);
      std::uint32_t f = 0;
      if (!a.i_res) f |= 1u;
      if (!a.i_est) f |= 2u;
      if (!a.i_true) f |= 4u;
      if (!a.losses_defined) f |= 8u;
      if (!pr.satisfied) f |= 16u;
      w.num(tol).text(to_string(kind)).integer(static_cast<long long>(pr.stop_index)).integer(pr.satisfied ? 1 : 0);
      w.index(a.i_res).index(a.i_est).index(a.i_true);
      if (a.losses_defined)
        w.integer(static_cast<long long>(a.accuracy_loss)).integer(static_cast<long long>(a.computation_loss));
      else
        w.text("nan").text("nan");
      w.num(a.delta_rel.value_or(kNaN)).integer(f);
      w.end_row();
    }
  }
  return exit_code::ok;
}

// ---------------------------------------------------------------------------

inline std::string all_schemas() {
  std::string s = "CSV schemas (header row always written; numbers in %.16e; missing values print as nan):\n";
  for (const char* c : {solve_schema(), estimate_schema(), ur_sweep_schema(), delay_sweep_schema(), bins_schema(),
                        stop_compare_schema()})
    s += std::string("  ") + c + "\n";
  return s;
}

/// Run one command, writing CSV to `out` and diagnostics to `err`. Library
/// errors map to exit codes: configuration 2, I/O and parsing 3, numerical 4.
inline int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    if (cfg.command == "solve") return cmd_solve(cfg, out);
    if (cfg.command == "estimate") return cmd_estimate(cfg, out);
    if (cfg.command == "ur-sweep") return cmd_ur_sweep(cfg, out);
    if (cfg.command == "delay-sweep") return cmd_delay_sweep(cfg, out);
    if (cfg.command == "bins") return cmd_bins(cfg, out);
    return cmd_stop_compare(cfg, out);
  } catch (const DomainError& e) {
    err << "kryest: configuration error: " << e.what() << '\n';
    return exit_code::config;
  } catch (const IoError& e) {
    err << "kryest: " << e.what() << '\n';
    return exit_code::io;
  } catch (const ParseError& e) {
    err << "kryest: " << e.what() << '\n';
    return exit_code::io;
  } catch (const StructuralError& e) {
    err << "kryest: " << e.what() << '\n';
    return exit_code::io;
  } catch (const UnsupportedFormat& e) {
    err << "kryest: " << e.what() << '\n';
    return exit_code::io;
  } catch (const std::exception& e) {
    err << "kryest: numerical failure: " << e.what() << '\n';
    return exit_code::numerical;
  }
}

/// Run a command with output to cfg.out (stdout when empty).
inline int run_to_file(const RunConfig& cfg, std::ostream& err = std::cerr) {
  if (cfg.out.empty()) return run_command(cfg, std::cout, err);
  std::ostringstream buf;
  const int code = run_command(cfg, buf, err);
  if (code == exit_code::config || code == exit_code::io || code == exit_code::numerical) return code;
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) {
    err << "kryest: cannot open '" << cfg.out << "' for writing\n";
    return exit_code::io;
  }
  f << buf.str();
  if (!f) {
    err << "kryest: write to '" << cfg.out << "' failed\n";
    return exit_code::io;
  }
  return code;
}

}  // namespace kryest::cli
