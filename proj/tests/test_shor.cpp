#include <gtest/gtest.h>

#include <cmath>

#include "cpop/linalg.hpp"
#include "cpop/shor.hpp"
#include "support/random.hpp"

using namespace cpop;
using cpop::testing::Rng;

namespace {

Eigen::MatrixXcd unit_diag(int n, int i) {
  Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(n, n);
  E(i, i) = 1.0;
  return E;
}

// inf (1+i) conj(z1) z2 + (1-i) conj(z2) z1 s.t. |z1|^2 <= 1, |z2|^2 <= 1
QcqpC two_bus_instance() {
  QcqpC q;
  q.n = 2;
  q.H0 = Eigen::MatrixXcd::Zero(2, 2);
  q.H0(0, 1) = Complex(1, 1);
  q.H0(1, 0) = Complex(1, -1);
  for (int i = 0; i < 2; ++i) q.constraints.push_back({unit_diag(2, i), Sense::kLe, 1.0});
  return q;
}

// Box |z_i|^2 <= 1 plus random Hermitian constraints satisfied at z = 0.
QcqpC random_qcqp(Rng& rng, int n, int extra) {
  QcqpC q;
  q.n = n;
  q.H0 = cpop::testing::random_hermitian(rng, n);
  for (int i = 0; i < n; ++i) q.constraints.push_back({unit_diag(n, i), Sense::kLe, 1.0});
  for (int k = 0; k < extra; ++k)
    q.constraints.push_back({cpop::testing::random_hermitian(rng, n), Sense::kLe, 0.5});
  return q;
}

double solve_value(const ShorRelaxation& r, SolveResult* out = nullptr) {
  SolveResult s = solve_program(r.program);
  EXPECT_EQ(s.status, SolveStatus::kOptimal);
  if (out) *out = s;
  return s.primal_value;
}

}  // namespace

TEST(Shor, TrivialInstanceHasValueOne) {
  QcqpC q;
  q.n = 1;
  q.H0 = unit_diag(1, 0);
  q.constraints.push_back({unit_diag(1, 0), Sense::kGe, 1.0});
  EXPECT_NEAR(solve_value(build_sdp_c(q)), 1.0, 1e-6);
  EXPECT_NEAR(solve_value(build_sdp_r(q)), 1.0, 1e-6);
  EXPECT_NEAR(solve_value(build_csdp_r(q)), 1.0, 1e-6);
  EXPECT_NEAR(solve_value(build_socp(q, RelaxForm::kComplex)), 1.0, 1e-6);
}

TEST(Shor, SecondOrderDiscrepancyExample) {
  QcqpC q = two_bus_instance();
  const double opt = -2.0 * std::sqrt(2.0);
  EXPECT_NEAR(solve_value(build_sdp_c(q)), opt, 1e-6);
  EXPECT_NEAR(solve_value(build_socp(q, RelaxForm::kComplex)), opt, 1e-6);
  EXPECT_NEAR(solve_value(build_socp(q, RelaxForm::kRealCoupled)), opt, 1e-6);
  EXPECT_NEAR(solve_value(build_socp(q, RelaxForm::kReal)), -4.0, 1e-6);
}

TEST(Shor, RealFormsMatchComplexSdp) {
  Rng rng(11);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 2 + trial % 3;
    QcqpC q = random_qcqp(rng, n, 2);
    const double c = solve_value(build_sdp_c(q));
    EXPECT_NEAR(solve_value(build_sdp_r(q)), c, 1e-5 * (1 + std::abs(c)));
    EXPECT_NEAR(solve_value(build_csdp_r(q)), c, 1e-5 * (1 + std::abs(c)));
    EXPECT_NEAR(solve_value(build_sdp_r(q, true)), c, 1e-5 * (1 + std::abs(c)));
  }
}

TEST(Shor, SecondOrderOrdering) {
  Rng rng(12);
  for (int trial = 0; trial < 8; ++trial) {
    QcqpC q = random_qcqp(rng, 3 + trial % 2, 1);
    const double sdp = solve_value(build_sdp_c(q));
    const double socp_c = solve_value(build_socp(q, RelaxForm::kComplex));
    const double socp_r = solve_value(build_socp(q, RelaxForm::kReal));
    const double csocp_r = solve_value(build_socp(q, RelaxForm::kRealCoupled));
    const double tol = 1e-6 * (1 + std::abs(sdp));
    EXPECT_LE(socp_c, sdp + tol);
    EXPECT_LE(socp_r, socp_c + tol);
    EXPECT_NEAR(csocp_r, socp_c, 1e-5 * (1 + std::abs(sdp)));
  }
}

TEST(Shor, UpperBoundFromFeasiblePoints) {
  // A relaxation value never exceeds the objective at a feasible point.
  Rng rng(13);
  QcqpC q = random_qcqp(rng, 3, 0);
  const double lb = solve_value(build_sdp_c(q));
  for (int k = 0; k < 200; ++k) {
    Eigen::VectorXcd z = cpop::testing::random_cvector(rng, 3, 0.5);
    ASSERT_LE(q.max_violation(z), 0.0);
    EXPECT_GE(q.objective(z), lb - 1e-7);
  }
}

TEST(Shor, CliqueDecompositionOnChordalSupport) {
  // Path graph 0-1-2: two cliques give the same value as the dense relaxation.
  Rng rng(14);
  for (int trial = 0; trial < 5; ++trial) {
    QcqpC q;
    q.n = 3;
    q.H0 = Eigen::MatrixXcd::Zero(3, 3);
    for (int i = 0; i < 3; ++i) q.H0(i, i) = cpop::testing::uniform(rng);
    for (int i = 0; i < 2; ++i) {
      q.H0(i, i + 1) = cpop::testing::random_complex(rng);
      q.H0(i + 1, i) = std::conj(q.H0(i, i + 1));
    }
    for (int i = 0; i < 3; ++i) q.constraints.push_back({unit_diag(3, i), Sense::kLe, 1.0});
    const double dense = solve_value(build_sdp_c(q));
    const double sparse = solve_value(build_sdp_c(q, {{0, 1}, {1, 2}}));
    EXPECT_NEAR(dense, sparse, 1e-6 * (1 + std::abs(dense)));
  }
}

TEST(Shor, CliquesMustCoverSupport) {
  QcqpC q = two_bus_instance();
  EXPECT_THROW(build_sdp_c(q, {{0}, {1}}), StructuralError);
}

TEST(Shor, RecoverRankOneSolution) {
  // Minimizing -|z1 + z2|^2 on the box-diagonal equalities has a rank-one optimum.
  QcqpC q;
  q.n = 2;
  q.H0 = -Eigen::MatrixXcd::Ones(2, 2);
  for (int i = 0; i < 2; ++i) q.constraints.push_back({unit_diag(2, i), Sense::kEq, 1.0});
  q.H0(0, 1) = q.H0(1, 0) = -1.0;
  SolveResult s;
  ShorRelaxation r = build_sdp_c(q);
  EXPECT_NEAR(solve_value(r, &s), -4.0, 1e-6);
  auto z = recover_solution(r.complex_matrix(s.x));
  ASSERT_TRUE(z.has_value());
  EXPECT_NEAR(q.objective(*z), -4.0, 1e-5);
  EXPECT_LE(q.max_violation(*z), 1e-5);

  ShorRelaxation rr = build_csdp_r(q);
  EXPECT_NEAR(solve_value(rr, &s), -4.0, 1e-6);
  auto zr = recover_solution(rr.real_matrix(s.x));
  ASSERT_TRUE(zr.has_value());
  EXPECT_NEAR(q.objective(*zr), -4.0, 1e-5);
}

TEST(Shor, RecoverRejectsHighRank) {
  Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(3, 3);
  EXPECT_FALSE(recover_solution(I).has_value());
  Eigen::MatrixXd X = Eigen::MatrixXd::Identity(6, 6);
  EXPECT_FALSE(recover_solution(X).has_value());
}

TEST(Shor, EmbeddingOfFeasiblePointIsFeasible) {
  // x x^T with x = (Re z, Im z) attains the same objective in SDP-R as z z^H in SDP-C.
  Rng rng(15);
  QcqpC q = random_qcqp(rng, 3, 1);
  Eigen::VectorXcd z = cpop::testing::random_cvector(rng, 3, 0.3);
  Eigen::VectorXd x(6);
  x << z.real(), z.imag();
  Eigen::MatrixXd X = x * x.transpose();
  EXPECT_NEAR((Eigen::MatrixXd(ring_embed(q.H0)) * X).trace(), q.objective(z) - q.offset, 1e-12);
}

TEST(Shor, QcqpFromPop) {
  ComplexPop pop;
  pop.n = 2;
  pop.objective = ComplexPolynomial::hermitian_form(two_bus_instance().H0);
  for (int i = 0; i < 2; ++i)
    pop.constraints.push_back({ComplexPolynomial::constant(2, 1.0) - ComplexPolynomial::abs2(2, i)});
  QcqpC q = qcqp_from_pop(pop);
  EXPECT_NEAR(solve_value(build_sdp_c(q)), -2.0 * std::sqrt(2.0), 1e-6);
  EXPECT_EQ(problem_graph(q).size(), 1u);

  ComplexPop quartic = pop;
  quartic.objective = quartic.objective * quartic.objective;
  EXPECT_THROW(qcqp_from_pop(quartic), StructuralError);
}

TEST(Shor, EpigraphCostAndNormConstraint) {
  // min (|z|^2 - 2)^2 s.t. |z|^2 <= 1: optimum 1 at |z| = 1.
  QcqpC q;
  q.n = 1;
  q.H0 = Eigen::MatrixXcd::Zero(1, 1);
  q.costs.push_back({unit_diag(1, 0), -2.0, 1.0, 0.0, 0.0});
  q.norms.push_back({{{unit_diag(1, 0), 0.0}}, 1.0});
  EXPECT_NEAR(solve_value(build_sdp_c(q)), 1.0, 1e-6);
  EXPECT_NEAR(solve_value(build_sdp_r(q)), 1.0, 1e-6);
}
