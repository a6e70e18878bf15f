#include <gtest/gtest.h>

#include <cmath>

#include "cpop/extract.hpp"
#include "cpop/linalg.hpp"
#include "support/random.hpp"

using namespace cpop;
using namespace cpop::testing;

namespace {

ComplexPop fixture(const std::string& name) { return load_pop(std::string(CPOP_DATA_DIR) + "/" + name + ".json"); }

Eigen::VectorXcd vec(std::initializer_list<Complex> v) {
  Eigen::VectorXcd z(v.size());
  int i = 0;
  for (Complex c : v) z(i++) = c;
  return z;
}

// Random measure with well separated atoms of modulus in [0.5, 1] per coordinate.
AtomicMeasure random_measure(Rng& rng, int n, int S, bool real = false) {
  AtomicMeasure m;
  while (m.size() < S) {
    Eigen::VectorXcd z(n);
    for (int k = 0; k < n; ++k)
      z(k) = real ? Complex(uniform(rng, 0.2, 1.0) * (uniform(rng) < 0 ? -1 : 1), 0.0)
                  : std::polar(uniform(rng, 0.5, 1.0), uniform(rng, 0.0, 2 * M_PI));
    bool ok = true;
    for (const auto& a : m.atoms) ok &= (a - z).norm() > (real ? 0.15 : 0.3);
    if (!ok) continue;
    m.atoms.push_back(z);
    m.weights.push_back(uniform(rng, 0.2, 1.0));
  }
  return m;
}

long binom(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Smallest order with d >= d_K + ceil(log2 S) and a flat basis of at least S monomials.
int roundtrip_order(int n, int S, int d_K) {
  int t = static_cast<int>(std::ceil(std::log2(std::max(S, 1))));
  while (binom(n + t, n) < S) ++t;
  return d_K + t;
}

// Nearest-neighbour matching error between two measures (atoms and weights).
double match_error(const AtomicMeasure& a, const AtomicMeasure& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double err = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < b.size(); ++j)
      if ((a.atoms[i] - b.atoms[j]).norm() < bd) {
        bd = (a.atoms[i] - b.atoms[j]).norm();
        best = j;
      }
    err = std::max({err, bd, std::abs(a.weights[i] - b.weights[best])});
  }
  return err;
}

PopConstraint unit_circle(int n, int k) {
  return {ComplexPolynomial::constant(n, 1.0) - ComplexPolynomial::abs2(n, k), true, "circle"};
}

}  // namespace

TEST(MomentsFromAtoms, Basics) {
  const MomentSequence y0 = moments_from_atoms({{Eigen::VectorXcd::Zero(2)}, {1.0}}, 2);
  for (const auto& [e, v] : y0.values()) {
    const bool zero = degree(e.alpha) + degree(e.beta) == 0;
    EXPECT_NEAR(std::abs(v - Complex(zero ? 1.0 : 0.0)), 0.0, 1e-15);
  }
  const MomentSequence y1 = moments_from_atoms({{vec({1.0}), vec({-1.0})}, {0.5, 0.5}}, 3);
  for (const auto& [e, v] : y1.values())
    EXPECT_NEAR(v.real(), (e.alpha[0] + e.beta[0]) % 2 ? 0.0 : 1.0, 1e-15);
  // Linearity in the measure.
  Rng rng(31);
  const AtomicMeasure m = random_measure(rng, 2, 3);
  const MomentSequence ym = moments_from_atoms(m, 2);
  for (const auto& [e, v] : ym.values()) {
    Complex s = 0.0;
    for (int j = 0; j < m.size(); ++j)
      s += m.weights[j] * moments_from_atoms({{m.atoms[j]}, {1.0}}, 2).get(e);
    EXPECT_NEAR(std::abs(v - s), 0.0, 1e-12);
  }
}

TEST(CheckConditions, TwoAtomsOnCirclePass) {
  const AtomicMeasure m{{vec({std::polar(1.0, 0.3)}), vec({std::polar(1.0, 2.0)})}, {0.4, 0.6}};
  const ExtractionReport r = check_conditions(moments_from_atoms(m, 2), 2, 1, {unit_circle(1, 0)});
  EXPECT_TRUE(r.moment_psd);
  EXPECT_TRUE(r.localizing_psd);
  EXPECT_EQ(r.rank_d, 2);
  EXPECT_EQ(r.rank_d_minus_dK, 2);
  EXPECT_TRUE(r.flatness);
  EXPECT_TRUE(r.commuting_ok);
  EXPECT_TRUE(r.passed());
  EXPECT_TRUE(r.ball_constraint);
  ASSERT_EQ(r.expected_zero_atoms.size(), 1u);
  EXPECT_EQ(r.expected_zero_atoms[0], 2);
}

TEST(CheckConditions, ThreeAtomsAtLowOrderAreNotFlat) {
  Rng rng(32);
  const AtomicMeasure m = random_measure(rng, 1, 3);
  const ExtractionReport r = check_conditions(moments_from_atoms(m, 1), 1, 1, {});
  EXPECT_EQ(r.rank_d, 2);
  EXPECT_EQ(r.rank_d_minus_dK, 1);
  EXPECT_FALSE(r.flatness);
  EXPECT_FALSE(r.passed());
  EXPECT_FALSE(r.ball_constraint);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_THROW(check_conditions(moments_from_atoms(m, 1), 2, 1, {}), StructuralError);
}

TEST(CheckConditions, NonMeasureSequenceFailsPointThree) {
  // Moments of z = 1 and z = -1 with y_{1,1} lowered: PSD but not a measure on C.
  MomentSequence y = moments_from_atoms({{vec({1.0}), vec({-1.0})}, {0.5, 0.5}}, 2);
  y.set(ExponentPair(Exponent{1}, Exponent{1}), 0.6);
  const ExtractionReport r = check_conditions(y, 2, 1, {});
  EXPECT_FALSE(r.passed());
}

TEST(ExtractAtoms, SingleAtomReadsFirstMoments) {
  const Eigen::VectorXcd z = vec({Complex(0.3, -0.4), Complex(-0.7, 0.1)});
  const MomentSequence y = moments_from_atoms({{z}, {1.0}}, 2);
  const ExtractionReport r = check_conditions(y, 2, 1, {});
  EXPECT_TRUE(r.rank_one);
  EXPECT_TRUE(r.passed());
  const ExtractionResult e = extract_atoms(y, 2, 1);
  ASSERT_EQ(e.status, ExtractionStatus::kExtracted);
  ASSERT_EQ(e.measure.size(), 1);
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(std::abs(e.measure.atoms[0](k) - z(k)), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(y.get(Exponent(2, 0), unit_exponent(2, k)) - z(k)), 0.0, 1e-12);
  }
}

TEST(ExtractAtoms, RoundtripHundredRandomMeasures) {
  Rng rng(33);
  int worst_case = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = uniform_int(rng, 1, 3);
    const int S = uniform_int(rng, 1, 5);
    const int d_K = 1;
    const int d = roundtrip_order(n, S, d_K);
    const AtomicMeasure m = random_measure(rng, n, S);
    const MomentSequence y = moments_from_atoms(m, d);
    const ExtractionReport rep = check_conditions(y, d, d_K, {});
    EXPECT_TRUE(rep.passed()) << "case " << t;
    EXPECT_EQ(rep.rank_d, S);
    ExtractionOptions o;
    o.seed = static_cast<unsigned>(t + 1);
    const ExtractionResult e = extract_atoms(y, d, d_K, o);
    ASSERT_EQ(e.status, ExtractionStatus::kExtracted) << "case " << t;
    const double err = match_error(m, e.measure);
    if (err > worst) {
      worst = err;
      worst_case = t;
    }
    EXPECT_LE(err, 1e-6) << "case " << t << " n=" << n << " S=" << S << " d=" << d;
    EXPECT_NEAR(e.measure.total_weight(), y.get(Exponent(n, 0), Exponent(n, 0)).real(), 1e-8);
  }
  RecordProperty("worst_error", std::to_string(worst) + " (case " + std::to_string(worst_case) + ")");
}

TEST(ExtractAtoms, HankelInputGivesRealAtoms) {
  Rng rng(34);
  for (int t = 0; t < 20; ++t) {
    const int n = uniform_int(rng, 1, 3);
    const int S = uniform_int(rng, 1, 4);
    const int d = roundtrip_order(n, S, 1);
    const AtomicMeasure m = random_measure(rng, n, S, true);
    const MomentSequence y = moments_from_atoms(m, d);
    // Hankel: y depends on alpha + beta only.
    for (const auto& [e, v] : y.values()) EXPECT_NEAR(v.imag(), 0.0, 1e-14);
    const ExtractionResult e = extract_atoms(y, d, 1);
    ASSERT_EQ(e.status, ExtractionStatus::kExtracted);
    for (const auto& z : e.measure.atoms) EXPECT_LE(z.imag().cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(match_error(m, e.measure), 1e-6);
  }
}

TEST(ExtractAtoms, GlobalPhaseDeterministicOrder) {
  Rng rng(35);
  const AtomicMeasure m = random_measure(rng, 2, 3);
  const MomentSequence y = moments_from_atoms(m, 3);
  ExtractionOptions a, b;
  a.seed = 3;
  b.seed = 99;
  const ExtractionResult ea = extract_atoms(y, 3, 1, a), eb = extract_atoms(y, 3, 1, b);
  ASSERT_EQ(ea.measure.size(), eb.measure.size());
  for (int j = 0; j < ea.measure.size(); ++j) EXPECT_LE((ea.measure.atoms[j] - eb.measure.atoms[j]).norm(), 1e-8);
}

TEST(JointDiagonalization, CommutingNormalFamily) {
  Rng rng(36);
  for (int t = 0; t < 10; ++t) {
    const int r = uniform_int(rng, 2, 6);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Eigen::MatrixXcd::NullaryExpr(r, r, [&] { return random_complex(rng); }));
    const Eigen::MatrixXcd U = qr.householderQ();
    std::vector<Eigen::MatrixXcd> fam;
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXcd dvals(r);
      for (int i = 0; i < r; ++i) dvals(i) = random_complex(rng);
      if (k == 0) dvals.setConstant(dvals(0));  // fully degenerate member
      fam.push_back(U * dvals.asDiagonal() * U.adjoint());
    }
    const JointDiagonalization jd = joint_diagonalize(fam, 7);
    EXPECT_LE(jd.offdiag, 1e-12);
    EXPECT_LE((jd.Q.adjoint() * jd.Q - Eigen::MatrixXcd::Identity(r, r)).norm(), 1e-12);
  }
}

TEST(JointDiagonalization, JacobiRepairsDegenerateStart) {
  // Every member has a repeated eigenvalue, but no common repeated pair: a random
  // combination separates them, and Jacobi sweeps clean the residual.
  Rng rng(37);
  const int r = 4;
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Eigen::MatrixXcd::NullaryExpr(r, r, [&] { return random_complex(rng); }));
  const Eigen::MatrixXcd U = qr.householderQ();
  Eigen::VectorXcd d1(r), d2(r);
  d1 << 1.0, 1.0, 2.0, 3.0;
  d2 << 5.0, 4.0, 4.0, Complex(0.0, 1.0);
  const std::vector<Eigen::MatrixXcd> fam{U * d1.asDiagonal() * U.adjoint(), U * d2.asDiagonal() * U.adjoint()};
  for (unsigned seed = 1; seed <= 20; ++seed) EXPECT_LE(joint_diagonalize(fam, seed).offdiag, 1e-12);
}

TEST(Certify, PutinarOrderThree) {
  const ComplexPop p = fixture("ex2sphere");
  RelaxationOptions o;
  o.order = 3;
  const MomentRelaxation r = build_moment_relaxation(p, o);
  const SolveResult s = solve_program(r.program);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  const MomentSequence y = r.moments(s.x);
  const int d_K = constraint_degree(p);
  EXPECT_EQ(d_K, 2);
  const ExtractionReport rep = check_conditions(y, 3, d_K, p.constraints);
  EXPECT_EQ(rep.rank_d, 2);
  EXPECT_EQ(rep.rank_d_minus_dK, 2);
  EXPECT_TRUE(rep.passed());
  const ExtractionResult e = extract_solution(y, 3, p.min_order(), d_K, p.constraints);
  ASSERT_EQ(e.status, ExtractionStatus::kExtracted);
  ASSERT_EQ(e.measure.size(), 2);
  const double root = 1.0 / std::sqrt(1.0 - 2.0 * 0.25);
  EXPECT_NEAR(e.measure.atoms[0](0).real(), -root, 1e-4);
  EXPECT_NEAR(e.measure.atoms[1](0).real(), root, 1e-4);
  for (const auto& z : e.measure.atoms) {
    EXPECT_NEAR(z(0).imag(), 0.0, 1e-4);
    EXPECT_NEAR(std::abs(z(1) - 1.0), 0.0, 1e-4);
  }
  const SosCertificate sos = sos_certificate(r, s.z, s.y, s.dual_value);
  const CertificationReport c = certify(p, s.primal_value, e.measure, &sos, 1e-4, &e.report);
  EXPECT_TRUE(c.certified);
  for (const auto& a : c.atoms) {
    EXPECT_NEAR(a.objective, 1.0, 1e-4);
    EXPECT_LE(a.kkt_stationarity, 1e-3);
    EXPECT_LE(a.kkt_complementarity, 1e-3);
  }
  // Equalities g1, g2, g3 hold at both atoms; counts match the rank differences.
  for (int i = 0; i < 3; ++i) EXPECT_EQ(c.zero_atoms[i], 2);
  EXPECT_TRUE(c.zero_counts_match);
  const nlohmann::json j = to_json(e);
  EXPECT_EQ(j["status"], "extracted");
  EXPECT_EQ(j["atoms"].size(), 2u);
  EXPECT_TRUE(to_json(c)["certified"].get<bool>());
}

TEST(Certify, PutinarOrderTwoIsNotFlat) {
  const ComplexPop p = fixture("ex2sphere");
  RelaxationOptions o;
  o.order = 2;
  const MomentRelaxation r = build_moment_relaxation(p, o);
  const SolveResult s = solve_program(r.program);
  const ExtractionResult e = extract_solution(r.moments(s.x), 2, p.min_order(), constraint_degree(p), p.constraints);
  EXPECT_NE(e.status, ExtractionStatus::kExtracted);
}

TEST(Certify, InfeasibleFakeAtomIsNamed) {
  const ComplexPop p = fixture("ex2sphere");
  AtomicMeasure m{{vec({std::sqrt(2.0), 1.0}), vec({0.5, 0.5})}, {0.5, 0.5}};
  const CertificationReport c = certify(p, 1.0, m);
  EXPECT_FALSE(c.certified);
  EXPECT_TRUE(c.atoms[0].feasible);
  EXPECT_FALSE(c.atoms[1].feasible);
  EXPECT_FALSE(c.atoms[1].violated.empty());
  EXPECT_EQ(to_json(c)["atoms"][1]["violated"], c.atoms[1].violated);
}

TEST(Certify, EqualityZeroCountsMatchRanks) {
  Rng rng(38);
  for (int t = 0; t < 5; ++t) {
    const int n = 2;
    AtomicMeasure m;
    // Atoms on the unit sphere of C^2 (zero set of the equality).
    while (m.size() < 3) {
      Eigen::VectorXcd z(n);
      for (int k = 0; k < n; ++k) z(k) = random_complex(rng);
      m.atoms.push_back(z / z.norm());
      m.weights.push_back(uniform(rng, 0.2, 1.0));
    }
    ComplexPop p;
    p.n = n;
    p.objective = ComplexPolynomial::abs2(n, 0);
    p.constraints.push_back({ComplexPolynomial::constant(n, 1.0) - ComplexPolynomial::abs2(n, 0) -
                                 ComplexPolynomial::abs2(n, 1),
                             true, "sphere"});
    const int d = 3;
    const MomentSequence y = moments_from_atoms(m, d);
    const ExtractionReport rep = check_conditions(y, d, 1, p.constraints);
    ASSERT_TRUE(rep.passed());
    EXPECT_EQ(rep.expected_zero_atoms[0], 3);
    const CertificationReport c = certify(p, 0.0, m, nullptr, 1e-8, &rep);
    EXPECT_EQ(c.zero_atoms[0], 3);
    EXPECT_TRUE(c.zero_counts_match);
  }
}
