// kryest: solver, estimator and uncertainty-ratio experiments as CSV.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kryest/cli/commands.hpp"

namespace {

std::string footer() {
  return kryest::cli::all_schemas() +
         "\nExit codes: 0 success, 2 configuration error, 3 I/O or parse error, 4 numerical failure,\n"
         "5 more than 10% of sweep rows failed.\n"
         "Options may also come from a TOML/INI file given with --config; command-line flags win.\n";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace kryest;
  cli::RunConfig cfg;
  std::string solver = "bicg", estimator, kind = cfg.kind;
  double tol = cfg.tol;

  CLI::App app{"Krylov solvers with delayed error estimators; every command writes one CSV table."};
  app.set_config("--config", "", "Read options from a TOML/INI file (flags win)");
  app.footer(footer());
  app.require_subcommand(1);

  app.add_option("--matrix", cfg.matrix_path, "Matrix Market file (coordinate or array, real)");
  app.add_option("--rhs", cfg.rhs_path, "Matrix Market right-hand side; random unit b when absent");
  app.add_option("--gen", cfg.gen, "Generated problem: n,kappa,kind,nonnormality (kind: spd, nonsym_posdef or pd, indefinite)");
  app.add_option("--solver", solver, "cg, bicg or gmres")->check(CLI::IsMember({"cg", "bicg", "gmres"}))->capture_default_str();
  app.add_option("--estimator", estimator, "cgql, bicgql-anorm, bicgql-l2, gmres-orig or gmres-mod")
      ->check(CLI::IsMember({"cgql", "bicgql-anorm", "bicgql-l2", "gmres-orig", "gmres-mod"}));
  app.add_option("--d", cfg.d, "Estimator delay")->capture_default_str();
  auto* tol_opt = app.add_option("--tol", tol, "Tolerance in (0, 1]")->capture_default_str();
  app.add_option("--max-it", cfg.max_it, "Iteration limit (0: n)")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  app.add_option("--out", cfg.out, "Output file (stdout when absent)");
  app.add_option("--jobs", cfg.jobs, "Worker threads for sweeps (0: all cores)")->capture_default_str();
  app.add_flag("--zero-x0", cfg.zero_x0, "Start from x0 = 0 instead of a random unit vector");

  app.add_option("--n", cfg.n, "Sweep problem size")->capture_default_str();
  app.add_option("--kind", kind, "Sweep spectrum: spd, nonsym_posdef (pd) or indefinite")->capture_default_str();
  app.add_option("--nonnormality", cfg.nonnormality, "Sweep non-normality")->capture_default_str();
  app.add_option("--kappa-exp", cfg.kappa_exp, "log10 kappa(A) range LO,HI,STEP")->delimiter(',')->capture_default_str();
  app.add_option("--per-level", cfg.per_level, "Matrices per kappa level")->capture_default_str();
  app.add_option("--rhs-per-matrix", cfg.rhs, "Right-hand sides per matrix")->capture_default_str();
  app.add_option("--d-grid", cfg.d_grid, "Delays for delay-sweep")->delimiter(',')->capture_default_str();
  app.add_option("--tol-grid", cfg.tol_grid, "Tolerances for stop-compare")->delimiter(',')->capture_default_str();
  app.add_option("--stop-tol", cfg.stop_tol, "ur-sweep: stop once the true relative error is below this");
  app.add_option("--fit-range", cfg.fit_range, "ur-sweep: kappa(A,x) range LO,HI of the slope fit")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--bin-kappas", cfg.bin_kappas, "bins: condition number of each bin")->delimiter(',')->capture_default_str();
  app.add_option("--matrices", cfg.matrices, "bins: matrices per bin")->capture_default_str();

  const auto sub = [&](const char* name, const char* desc) { app.add_subcommand(name, desc)->fallthrough(); };
  sub("solve", "Per-iterate residuals and oracle errors of one solve");
  sub("estimate", "Per-iteration error estimates next to the oracle error");
  sub("ur-sweep", "Uncertainty ratios over a kappa ladder, with a fitted log-log slope");
  sub("delay-sweep", "Mean normalized uncertainty ratios against the delay d");
  sub("bins", "Mean relative l2 estimation error per condition-number bin");
  sub("stop-compare", "Stopping indices and losses across tolerances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::exit_code::config;
  }

  try {
    cfg.command = app.get_subcommands().front()->get_name();
    cfg.solver = parse_solver(solver);
    if (!estimator.empty()) cfg.estimator = parse_estimator(estimator);
    cfg.kind = kind;
    cfg.tol = tol;
    cfg.tol_given = tol_opt->count() > 0;
  } catch (const DomainError& e) {
    std::cerr << "kryest: configuration error: " << e.what() << '\n';
    return cli::exit_code::config;
  }
  return cli::run_to_file(cfg);
}
