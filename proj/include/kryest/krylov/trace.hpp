#pragma once

/// \file kryest/krylov/trace.hpp
/// \brief Per-iteration records shared by all solvers, and the observer
/// protocol used to attach estimators and stopping policies.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kryest/linalg.hpp"
#include "kryest/matstore/problem.hpp"

namespace kryest {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Observer verdict after each iteration.
enum class Control { proceed, stop };

enum class SolveStatus {
  max_iterations,  ///< iteration budget exhausted
  exact,           ///< zero residual, happy breakdown or full Krylov space
  converged,       ///< relative residual fell below SolveOptions::tol
  stopped,         ///< observer requested a stop
};

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::exact: return "exact";
    case SolveStatus::converged: return "converged";
    case SolveStatus::stopped: return "stopped";
  }
  return "?";
}

/// State k of a run: iterate x_k and its residual, plus the coefficients
/// that carry x_k to x_{k+1} (NaN on the last record and for GMRES).
struct IterationRecord {
  std::size_t k = 0;
  double res_norm = 0.0;       ///< recurrence residual ||r_k||
  double true_res_norm = kNaN; ///< ||b - A x_k|| recomputed
  double x_norm = 0.0;         ///< ||x_k||
  double alpha = kNaN;
  double beta = kNaN;
  double true_err_norm = kNaN;      ///< ||x - x_k|| (oracle)
  double true_err_anorm_sq = kNaN;  ///< |e_k^T A e_k| (oracle)
};

struct ConvergenceTrace {
  std::string solver;
  std::vector<IterationRecord> records;  ///< records[k] describes x_k
  SolveStatus status = SolveStatus::max_iterations;
  double b_norm = 0.0;
  double r0_norm = 0.0;
  double x_true_norm = kNaN;
  double x_true_anorm = kNaN;  ///< sqrt(|x^T A x|)
  Vector x_final;

  /// Number of iterations executed (records.size() - 1).
  std::size_t iterations() const noexcept { return records.empty() ? 0 : records.size() - 1; }
  bool exact_termination() const noexcept { return status == SolveStatus::exact; }
  bool has_oracle() const noexcept { return !std::isnan(x_true_norm); }
};

struct SolveOptions {
  std::size_t max_it = 0;   ///< 0 means n
  double tol = 0.0;         ///< stop once ||r_k||/||b|| <= tol; 0 disables
  bool true_residual = true;
};

/// Data exposed by CG and Bi-CG after step k (x_k -> x_{k+1}).
struct DirectionStep {
  std::size_t k;
  double alpha;                       ///< alpha_k
  double beta;                        ///< beta_k
  std::span<const double> r;          ///< r_k
  std::span<const double> r_next;     ///< r_{k+1}
  std::span<const double> p;          ///< p_k
  std::span<const double> ap;         ///< A p_k
  std::span<const double> x_next;     ///< x_{k+1}
  double rr;                          ///< r_k^T r_k
  double rr_next;                     ///< r_{k+1}^T r_{k+1}
  const IterationRecord& record;      ///< record k+1
};

/// Upper-Hessenberg matrix grown one column per Arnoldi step; entry
/// (i, j) is h_{i+1, j+1} in one-based notation.
class Hessenberg {
 public:
  std::size_t cols() const noexcept { return cols_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return i <= j + 1 ? cols_[j][i] : 0.0; }
  void push_column(Vector c) { cols_.push_back(std::move(c)); }
  void set_subdiagonal(std::size_t j, double v) { cols_[j][j + 1] = v; }

  /// Column-major copy of the leading (rows x k) block.
  Vector dense(std::size_t rows, std::size_t k) const {
    Vector a(rows * k, 0.0);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < rows && i <= j + 1; ++i) a[i + j * rows] = cols_[j][i];
    return a;
  }

 private:
  std::vector<Vector> cols_;
};

/// Data exposed by GMRES after Arnoldi step k (k >= 1 columns in H).
struct ArnoldiStep {
  std::size_t k;
  const Hessenberg& h;   ///< extended (k+1) x k Hessenberg
  double beta;           ///< ||r_0||
  bool terminal;         ///< happy breakdown or k == n: h_{k+1,k} treated as 0
  std::span<const double> x;
  const IterationRecord& record;
};

struct NoObserver {
  template <class Step>
  Control operator()(const Step&) const noexcept {
    return Control::proceed;
  }
};

namespace detail {

/// Fill the residual and oracle fields of a record.
inline IterationRecord make_record(const ProblemInstance& p, std::size_t k, std::span<const double> x,
                                   double res_norm, bool true_residual, Vector& scratch) {
  IterationRecord rec;
  rec.k = k;
  rec.res_norm = res_norm;
  Vector xv(x.begin(), x.end());
  rec.x_norm = nrm2(xv);
  const std::size_t n = p.n();
  if (true_residual) {
    p.a.apply(x, scratch);
    for (std::size_t i = 0; i < n; ++i) scratch[i] = p.b[i] - scratch[i];
    rec.true_res_norm = nrm2(scratch);
  }
  if (p.x_true) {
    Vector e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = (*p.x_true)[i] - x[i];
    rec.true_err_norm = nrm2(e);
    p.a.apply(e, scratch);
    rec.true_err_anorm_sq = std::abs(dot(e, scratch));
  }
  return rec;
}

inline ConvergenceTrace start_trace(const ProblemInstance& p, std::string solver) {
  ConvergenceTrace t;
  t.solver = std::move(solver);
  t.b_norm = nrm2(p.b);
  if (p.x_true) {
    t.x_true_norm = nrm2(*p.x_true);
    Vector ax(p.n());
    p.a.apply(*p.x_true, ax);
    t.x_true_anorm = std::sqrt(std::abs(dot(*p.x_true, ax)));
  }
  return t;
}

inline std::size_t budget(const ProblemInstance& p, const SolveOptions& o) {
  return o.max_it == 0 ? p.n() : o.max_it;
}

}  // namespace detail

}  // namespace kryest
