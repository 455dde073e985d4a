#pragma once

/// \file kryest/matstore/problem.hpp
/// \brief Linear-system instances, the direct-solve oracle, condition numbers
/// and synthetic problems with a prescribed spectrum.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "kryest/error.hpp"
#include "kryest/linalg.hpp"
#include "kryest/matstore/dense_matrix.hpp"

namespace kryest {

struct ConditionReport {
  double kappa_forward = 0.0;    ///< kappa(A,x) = ||A|| ||x|| / ||Ax||
  double kappa_backward = 0.0;   ///< kappa(A,b) = ||A^-1|| ||b|| / ||A^-1 b||
  double kappa_matrix = 0.0;     ///< kappa(A) = ||A|| ||A^-1||
  double kappa_f_forward = 0.0;  ///< (||A||_F / sqrt(n)) (||x|| / ||b||)
};

/// A x = b with start x0 and, when available, the oracle solution.
struct ProblemInstance {
  DenseMatrix a;
  Vector b;
  Vector x0;
  std::optional<Vector> x_true;
  std::string label;

  std::size_t n() const noexcept { return a.rows(); }
};

// ---------------------------------------------------------------------------
// direct solve

/// Pivoted LU with one or two steps of extended-precision iterative
/// refinement. Throws SingularMatrix on a zero pivot to working precision.
inline Vector direct_solve(const DenseMatrix& a, const Vector& b) {
  if (!a.square()) throw DomainError("direct_solve: matrix not square");
  if (b.size() != a.rows()) throw DomainError("direct_solve: size mismatch");
  const auto n = static_cast<Eigen::Index>(a.rows());
  const Eigen::MatrixXd m = a.eigen();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const Eigen::MatrixXd& packed = lu.matrixLU();
  double umax = 0.0, umin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    umax = std::max(umax, std::abs(packed(i, i)));
    umin = std::min(umin, std::abs(packed(i, i)));
  }
  if (!(umin > std::numeric_limits<double>::epsilon() * umax))
    throw SingularMatrix("direct_solve: zero pivot to working precision");

  const Eigen::Map<const Eigen::VectorXd> bv(b.data(), n);
  Eigen::VectorXd x = lu.solve(bv);
  Eigen::VectorXd r(n);
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (Eigen::Index i = 0; i < n; ++i) {
      long double s = static_cast<long double>(b[static_cast<std::size_t>(i)]);
      const auto row = a.row(static_cast<std::size_t>(i));
      for (Eigen::Index j = 0; j < n; ++j)
        s -= static_cast<long double>(row[static_cast<std::size_t>(j)]) * static_cast<long double>(x(j));
      r(i) = static_cast<double>(s);
    }
    x += lu.solve(r);
  }
  Vector out(x.data(), x.data() + n);
  if (!all_finite(out)) throw SingularMatrix("direct_solve: non-finite solution");
  return out;
}

/// ||A x - b|| / ||b||, accumulated in extended precision.
inline double relative_residual(const DenseMatrix& a, const Vector& x, const Vector& b) {
  long double ss = 0.0L;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    long double s = -static_cast<long double>(b[i]);
    const auto row = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) s += static_cast<long double>(row[j]) * x[j];
    ss += s * s;
  }
  const double nb = nrm2(b);
  return static_cast<double>(std::sqrt(ss)) / (nb > 0.0 ? nb : 1.0);
}

/// Attach the direct-solve oracle to an instance.
///
/// The post-check accepts ||Ax-b||/||b|| <= 1e-10, or the backward-stable
/// bound 64 n eps ||A||_F ||x|| / ||b|| when kappa(A,x) makes 1e-10
/// unreachable in double precision.
inline ProblemInstance make_problem(DenseMatrix a, Vector b, Vector x0, std::string label) {
  if (!a.square()) throw DomainError("make_problem: matrix not square");
  if (b.size() != a.rows() || x0.size() != a.rows()) throw DomainError("make_problem: size mismatch");
  ProblemInstance p{std::move(a), std::move(b), std::move(x0), std::nullopt, std::move(label)};
  Vector x = direct_solve(p.a, p.b);
  const double res = relative_residual(p.a, x, p.b);
  const double nb = nrm2(p.b);
  const double stable = 64.0 * static_cast<double>(p.n()) * std::numeric_limits<double>::epsilon() *
                        p.a.frobenius_norm() * nrm2(x) / (nb > 0.0 ? nb : 1.0);
  if (!(res <= std::max(1e-10, stable))) throw SingularMatrix("make_problem: direct solve residual too large");
  p.x_true = std::move(x);
  return p;
}

// ---------------------------------------------------------------------------
// condition numbers

/// Singular values, descending (full SVD).
inline Eigen::VectorXd singular_values(const DenseMatrix& a) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(a.eigen()));
  return svd.singularValues();
}

inline double matrix_condition(const DenseMatrix& a) {
  const Eigen::VectorXd s = singular_values(a);
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0)) throw SingularMatrix("matrix_condition: singular matrix");
  return s(0) / smin;
}

inline ConditionReport condition_report(const ProblemInstance& p) {
  if (!p.x_true) throw DomainError("condition_report: oracle solution required");
  const Eigen::VectorXd s = singular_values(p.a);
  const double smax = s(0), smin = s(s.size() - 1);
  if (!(smin > std::numeric_limits<double>::epsilon() * smax))
    throw SingularMatrix("condition_report: singular matrix");
  const double nx = nrm2(*p.x_true);
  const double nb = nrm2(p.b);
  if (!(nb > 0.0) || !(nx > 0.0)) throw DomainError("condition_report: zero right-hand side");
  ConditionReport c;
  // ||Ax|| = ||b|| and ||A^-1 b|| = ||x|| for the oracle solution
  c.kappa_forward = smax * nx / nb;
  c.kappa_backward = (1.0 / smin) * nb / nx;
  c.kappa_matrix = smax / smin;
  c.kappa_f_forward = (p.a.frobenius_norm() / std::sqrt(static_cast<double>(p.n()))) * (nx / nb);
  return c;
}

/// Extreme eigenvalues of a symmetric matrix.
inline std::pair<double, double> symmetric_eigen_extremes(const DenseMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(a.eigen()), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev(0), ev(ev.size() - 1)};
}

/// kappa(A,x) measured in the A-norm for symmetric positive definite A:
/// ||A||_A ||x||_A / ||b||_A with ||A||_A = lambda_max.
inline double kappa_forward_anorm(const ProblemInstance& p) {
  if (!p.x_true) throw DomainError("kappa_forward_anorm: oracle solution required");
  const auto [lmin, lmax] = symmetric_eigen_extremes(p.a);
  if (!(lmin > 0.0)) throw DomainError("kappa_forward_anorm: matrix not positive definite");
  const double xa = std::sqrt(dot(*p.x_true, p.b));
  const double ba = std::sqrt(dot(p.b, p.a.apply(p.b)));
  return lmax * xa / ba;
}

// ---------------------------------------------------------------------------
// synthetic problems

enum class SpectrumKind { spd, nonsym_posdef, indefinite };

inline std::string to_string(SpectrumKind k) {
  switch (k) {
    case SpectrumKind::spd: return "spd";
    case SpectrumKind::nonsym_posdef: return "nonsym_posdef";
    case SpectrumKind::indefinite: return "indefinite";
  }
  return "?";
}

inline SpectrumKind parse_spectrum_kind(const std::string& s) {
  if (s == "spd") return SpectrumKind::spd;
  if (s == "nonsym_posdef" || s == "pd") return SpectrumKind::nonsym_posdef;
  if (s == "indefinite") return SpectrumKind::indefinite;
  throw DomainError("unknown spectrum kind '" + s + "'");
}

struct SpectrumSpec {
  std::size_t n = 100;
  double kappa_target = 1e6;
  SpectrumKind kind = SpectrumKind::nonsym_posdef;
  double nonnormality = 0.0;
  std::uint64_t seed = 0;
};

inline Vector random_unit_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (double& x : v) x = normal(rng);
  scale(1.0 / nrm2(v), v);
  return v;
}

/// Haar-distributed orthogonal matrix.
inline Eigen::MatrixXd random_orthogonal(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < m; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

/// Eigenvalues for a spectrum spec: magnitudes 1 and kappa pinned at the
/// ends, the rest uniform in between; `indefinite` negates a random half.
inline Vector spectrum_eigenvalues(const SpectrumSpec& spec, std::mt19937_64& rng) {
  const std::size_t n = spec.n;
  std::uniform_real_distribution<double> unif(1.0, spec.kappa_target);
  Vector lam(n);
  for (std::size_t i = 0; i < n; ++i) lam[i] = unif(rng);
  lam[0] = 1.0;
  if (n > 1) lam[n - 1] = spec.kappa_target;
  if (spec.kappa_target == 1.0) std::fill(lam.begin(), lam.end(), 1.0);
  if (spec.kind == SpectrumKind::indefinite) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < n / 2; ++i) lam[idx[i]] = -lam[idx[i]];
  }
  return lam;
}

/// A = Q (Lambda + N) Q^T with N strictly upper triangular, entries uniform
/// in [-nonnormality, nonnormality] (zero for `spd`, which is symmetrized
/// exactly).
inline DenseMatrix generate_matrix(const SpectrumSpec& spec, std::mt19937_64& rng) {
  if (spec.n == 0) throw DomainError("generate_matrix: n must be >= 1");
  if (!(spec.kappa_target >= 1.0)) throw DomainError("generate_matrix: kappa_target must be >= 1");
  if (!(spec.nonnormality >= 0.0)) throw DomainError("generate_matrix: nonnormality must be >= 0");
  const auto m = static_cast<Eigen::Index>(spec.n);
  const Vector lam = spectrum_eigenvalues(spec, rng);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) t(i, i) = lam[static_cast<std::size_t>(i)];
  if (spec.kind != SpectrumKind::spd && spec.nonnormality > 0.0) {
    std::uniform_real_distribution<double> off(-spec.nonnormality, spec.nonnormality);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j) t(i, j) = off(rng);
  }
  const Eigen::MatrixXd q = random_orthogonal(spec.n, rng);
  Eigen::MatrixXd a = q * t * q.transpose();
  if (spec.kind == SpectrumKind::spd) {
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const double s = 0.5 * (a(i, j) + a(j, i));
        a(i, j) = s;
        a(j, i) = s;
      }
  }
  return DenseMatrix::from_eigen(a);
}

inline std::string spec_label(const SpectrumSpec& spec) {
  std::ostringstream os;
  os << "gen:n=" << spec.n << ",kappa=" << spec.kappa_target << ",kind=" << to_string(spec.kind)
     << ",nn=" << spec.nonnormality << ",seed=" << spec.seed;
  return os.str();
}

/// Deterministic under `spec.seed`: matrix, then b, then x0 from one stream.
inline ProblemInstance generate_problem(const SpectrumSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  DenseMatrix a = generate_matrix(spec, rng);
  Vector b = random_unit_vector(spec.n, rng);
  Vector x0 = random_unit_vector(spec.n, rng);
  try {
    return make_problem(std::move(a), std::move(b), std::move(x0), spec_label(spec));
  } catch (const SingularMatrix& e) {
    throw GenerationError(std::string("generate_problem: ") + e.what());
  }
}

}  // namespace kryest
