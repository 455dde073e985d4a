#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "kryest/krylov/bicg.hpp"
#include "kryest/krylov/cg.hpp"
#include "kryest/krylov/gmres.hpp"
#include "kryest/krylov/lanczos.hpp"
#include "kryest/matstore/problem.hpp"

using namespace kryest;

namespace {

Eigen::MatrixXd dense(const DenseMatrix& a) { return a.eigen(); }

Eigen::VectorXd ev(const Vector& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::vector<double> alphas(const ConvergenceTrace& t) {
  std::vector<double> a;
  for (std::size_t k = 0; k < t.iterations(); ++k) a.push_back(t.records[k].alpha);
  return a;
}

std::vector<double> betas(const ConvergenceTrace& t) {
  std::vector<double> b;
  for (std::size_t k = 0; k < t.iterations(); ++k) b.push_back(t.records[k].beta);
  return b;
}

}  // namespace

TEST(Cg, IdentityConvergesInOneStep) {
  ProblemInstance p = make_problem(DenseMatrix::identity(3), Vector{1, 2, 3}, Vector(3, 0.0), "I");
  const ConvergenceTrace t = cg_run(p);
  EXPECT_EQ(t.iterations(), 1u);
  EXPECT_EQ(t.status, SolveStatus::exact);
  EXPECT_EQ(t.x_final, (Vector{1, 2, 3}));
  EXPECT_EQ(t.records[1].true_err_norm, 0.0);
}

TEST(Cg, ConvergesWithinNStepsOnSmallSpd) {
  ProblemInstance p = generate_problem({20, 50, SpectrumKind::spd, 0.0, 4});
  SolveOptions o;
  o.tol = 1e-12;
  o.max_it = 60;
  const ConvergenceTrace t = cg_run(p, o);
  EXPECT_EQ(t.status, SolveStatus::converged);
  EXPECT_LE(t.iterations(), 30u);
  const Eigen::VectorXd r = ev(p.b) - dense(p.a) * ev(t.x_final);
  EXPECT_LT(r.norm() / ev(p.b).norm(), 1e-11);
}

TEST(Cg, RejectsNonsymmetricAndIndefinite) {
  ProblemInstance ns = generate_problem({10, 10, SpectrumKind::nonsym_posdef, 0.5, 1});
  EXPECT_THROW(cg_run(ns), DomainError);
  ProblemInstance ind = make_problem(DenseMatrix::diagonal(std::vector<double>{1.0, -1.0}), Vector{1, 1}, Vector{0, 0}, "d");
  EXPECT_THROW(cg_run(ind), Breakdown);
}

TEST(Cg, ResidualsAreMutuallyOrthogonal) {
  ProblemInstance p = generate_problem({30, 1e2, SpectrumKind::spd, 0.0, 5});
  std::vector<Vector> rs;
  auto obs = [&](const DirectionStep& s) {
    if (rs.empty()) rs.emplace_back(s.r.begin(), s.r.end());
    rs.emplace_back(s.r_next.begin(), s.r_next.end());
    return Control::proceed;
  };
  SolveOptions o;
  o.max_it = 8;
  cg_run(p, o, obs);
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      EXPECT_LT(std::abs(dot(rs[i], rs[j])), 1e-10 * nrm2(rs[i]) * nrm2(rs[j]));
}

TEST(Bicg, CoincidesWithCgOnSymmetricMatrix) {
  ProblemInstance p = generate_problem({40, 1e3, SpectrumKind::spd, 0.0, 6});
  SolveOptions o;
  o.max_it = 25;
  const ConvergenceTrace c = cg_run(p, o), b = bicg_run(p, o);
  ASSERT_EQ(c.records.size(), b.records.size());
  for (std::size_t k = 0; k < c.records.size(); ++k) {
    EXPECT_EQ(c.records[k].res_norm, b.records[k].res_norm) << k;
    if (k < c.iterations()) {
      EXPECT_EQ(c.records[k].alpha, b.records[k].alpha) << k;
    }
  }
  EXPECT_EQ(c.x_final, b.x_final);
}

TEST(Bicg, SolvesNonsymmetricSystem) {
  ProblemInstance p = generate_problem({30, 1e2, SpectrumKind::nonsym_posdef, 0.1, 8});
  SolveOptions o;
  o.tol = 1e-10;
  o.max_it = 200;
  const ConvergenceTrace t = bicg_run(p, o);
  EXPECT_EQ(t.status, SolveStatus::converged);
  EXPECT_LT((ev(*p.x_true) - ev(t.x_final)).norm() / ev(*p.x_true).norm(), 1e-6);
}

TEST(Bicg, TridiagonalMatchesProjection) {
  // T_k is similar to (R~^T R)^{-1} R~^T A R for the residual bases; only
  // similarity invariants and the diagonal are split independent.
  ProblemInstance p = generate_problem({25, 1e2, SpectrumKind::nonsym_posdef, 0.2, 9});
  std::fill(p.x0.begin(), p.x0.end(), 0.0);
  const std::size_t k = 6;
  std::vector<Vector> r;
  auto obs = [&](const DirectionStep& s) {
    if (r.empty()) r.emplace_back(s.r.begin(), s.r.end());
    r.emplace_back(s.r_next.begin(), s.r_next.end());
    return Control::proceed;
  };
  SolveOptions o;
  o.max_it = k;
  const ConvergenceTrace t = bicg_run(p, o, obs);
  // shadow residuals: Bi-CG on A^T from the same start
  ProblemInstance pt = make_problem(p.a.transpose(), p.b, p.x0, "AT");
  std::vector<Vector> rs;
  auto obs_t = [&](const DirectionStep& s) {
    if (rs.empty()) rs.emplace_back(s.r.begin(), s.r.end());
    rs.emplace_back(s.r_next.begin(), s.r_next.end());
    return Control::proceed;
  };
  bicg_run(pt, o, obs_t);
  const Eigen::MatrixXd a = dense(p.a);
  Eigen::MatrixXd proj(k, k), gram(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      proj(i, j) = ev(rs[i]).dot(a * ev(r[j]));
      gram(i, j) = ev(rs[i]).dot(ev(r[j]));
    }
  // bi-orthogonality
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j) {
        EXPECT_LT(std::abs(gram(i, j)), 1e-9 * std::sqrt(std::abs(gram(i, i) * gram(j, j))));
      }
  const Eigen::MatrixXd oracle = gram.diagonal().asDiagonal().inverse() * proj;
  const Vector tk = bicg_tridiagonal(alphas(t), betas(t), k);
  const Eigen::MatrixXd tm = Eigen::Map<const Eigen::MatrixXd>(tk.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  // similarity-invariant comparison
  EXPECT_NEAR(tm.trace(), oracle.trace(), 1e-8 * std::abs(oracle.trace()));
  EXPECT_NEAR(tm.determinant(), oracle.determinant(), 1e-7 * std::abs(oracle.determinant()));
  for (std::size_t i = 0; i < k; ++i) EXPECT_NEAR(tm(i, i), oracle(i, i), 1e-8 * std::abs(oracle(i, i)));
}

TEST(Gmres, ArnoldiRelationHolds) {
  ProblemInstance p = generate_problem({30, 1e3, SpectrumKind::indefinite, 0.2, 10});
  const Vector r0 = sub(p.b, p.a.apply(p.x0));
  const std::size_t k = 12;
  const ArnoldiResult ar = arnoldi(p.a, r0, k);
  ASSERT_EQ(ar.v.size(), k + 1);
  Eigen::MatrixXd v(30, k + 1), h = Eigen::MatrixXd::Zero(k + 1, k);
  for (std::size_t j = 0; j <= k; ++j) v.col(static_cast<Eigen::Index>(j)) = ev(ar.v[j]);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i <= j + 1; ++i) h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ar.h(i, j);
  const Eigen::MatrixXd lhs = dense(p.a) * v.leftCols(k);
  EXPECT_LT((lhs - v * h).norm(), 1e-12 * lhs.norm());
  EXPECT_LT((v.transpose() * v - Eigen::MatrixXd::Identity(k + 1, k + 1)).norm(), 1e-12);
}

TEST(Gmres, IterateMinimizesResidualOverKrylovSpace) {
  ProblemInstance p = generate_problem({25, 1e2, SpectrumKind::nonsym_posdef, 0.3, 12});
  const std::size_t k = 7;
  SolveOptions o;
  o.max_it = k;
  const ConvergenceTrace t = gmres_run(p, o);
  // oracle: least squares over span{r0, A r0, ...} via Eigen QR
  const Eigen::MatrixXd a = dense(p.a);
  const Eigen::VectorXd r0 = ev(p.b) - a * ev(p.x0);
  Eigen::MatrixXd kry(25, k);
  Eigen::VectorXd q = r0 / r0.norm();
  for (std::size_t j = 0; j < k; ++j) {
    kry.col(static_cast<Eigen::Index>(j)) = q;
    q = a * q;
    q /= q.norm();
  }
  const Eigen::MatrixXd basis = kry.householderQr().householderQ() * Eigen::MatrixXd::Identity(25, k);
  const Eigen::VectorXd y = (a * basis).colPivHouseholderQr().solve(r0);
  const double best = (r0 - a * basis * y).norm();
  EXPECT_NEAR(t.records[k].res_norm, best, 1e-8 * best);
  EXPECT_NEAR(t.records[k].true_res_norm, best, 1e-8 * best);
  for (std::size_t j = 1; j <= k; ++j) EXPECT_LE(t.records[j].res_norm, t.records[j - 1].res_norm * (1 + 1e-12));
}

TEST(Gmres, HappyBreakdownIsExact) {
  // two distinct eigenvalues: the Krylov space has dimension 2
  const std::vector<double> d{2, 2, 2, 5, 5};
  ProblemInstance p = make_problem(DenseMatrix::diagonal(d), Vector{1, 1, 1, 1, 1}, Vector(5, 0.0), "d");
  const ConvergenceTrace t = gmres_run(p);
  EXPECT_EQ(t.status, SolveStatus::exact);
  EXPECT_EQ(t.iterations(), 2u);
  EXPECT_LT(t.records[2].true_err_norm, 1e-14);
}

TEST(Lanczos, DiagonalMatrixCoefficients) {
  // A = diag(1,2,3), v = (1,1,1)/sqrt3: omega_1 = 2, eta_1 = sqrt(2/3)
  const std::vector<double> d{1, 2, 3};
  const LanczosResult l = lanczos_run(DenseMatrix::diagonal(d), Vector{1, 1, 1}, 3);
  ASSERT_GE(l.steps(), 2u);
  EXPECT_NEAR(l.omega[0], 2.0, 1e-15);
  EXPECT_NEAR(l.eta[0], std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(l.omega[1], 2.0, 1e-14);
  ASSERT_EQ(l.steps(), 3u);
  // the full tridiagonal is similar to A
  const Vector t = tridiagonal(l.omega, std::span<const double>(l.eta).first(2), std::span<const double>(l.eta).first(2));
  const Eigen::Map<const Eigen::Matrix3d> tm(t.data());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(tm);
  EXPECT_NEAR(es.eigenvalues()(0), 1.0, 1e-13);
  EXPECT_NEAR(es.eigenvalues()(1), 2.0, 1e-13);
  EXPECT_NEAR(es.eigenvalues()(2), 3.0, 1e-13);
  EXPECT_TRUE(l.invariant);
}

TEST(Lanczos, CgCoefficientsReproduceLanczos) {
  ProblemInstance p = generate_problem({40, 1e2, SpectrumKind::spd, 0.0, 13});
  const std::size_t k = 10;
  SolveOptions o;
  o.max_it = k;
  const ConvergenceTrace t = cg_run(p, o);
  const Vector r0 = sub(p.b, p.a.apply(p.x0));
  const LanczosResult direct = lanczos_run(p.a, r0, k);
  const LanczosResult from_cg = lanczos_from_cg(alphas(t), betas(t), k);
  for (std::size_t j = 0; j < k; ++j) {
    EXPECT_NEAR(from_cg.omega[j], direct.omega[j], 1e-9 * std::abs(direct.omega[j])) << j;
    EXPECT_NEAR(from_cg.eta[j], direct.eta[j], 1e-9 * direct.eta[j]) << j;
  }
}

TEST(Lanczos, RejectsNonsymmetric) {
  DenseMatrix a{{1, 2}, {0, 1}};
  EXPECT_THROW(lanczos_run(a, Vector{1, 0}, 2), DomainError);
}

TEST(Trace, ObserverStopEndsRun) {
  ProblemInstance p = generate_problem({30, 1e2, SpectrumKind::nonsym_posdef, 0.1, 14});
  auto stop_at_3 = [](const auto& s) { return s.record.k >= 3 ? Control::stop : Control::proceed; };
  EXPECT_EQ(bicg_run(p, {}, stop_at_3).iterations(), 3u);
  EXPECT_EQ(gmres_run(p, {}, stop_at_3).iterations(), 3u);
  EXPECT_EQ(bicg_run(p, {}, stop_at_3).status, SolveStatus::stopped);
}
