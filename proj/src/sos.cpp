#include <cmath>

#include "cpop/linalg.hpp"
#include "cpop/moment.hpp"

namespace cpop {

namespace {

// sum_ab G(a, b) conj(z^alpha_a) z^alpha_b
ComplexPolynomial gram_polynomial(int n, const std::vector<Exponent>& basis, const Eigen::MatrixXcd& G) {
  ComplexPolynomial p(n);
  for (size_t a = 0; a < basis.size(); ++a)
    for (size_t b = 0; b < basis.size(); ++b)
      if (std::abs(G(a, b)) > 0.0) p.add_term(ExponentPair(basis[a], basis[b]), G(a, b));
  return p;
}

double max_abs_coefficient(const ComplexPolynomial& p) {
  double m = 0.0;
  for (const auto& [e, c] : p.terms()) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace

SosCertificate sos_certificate(const MomentRelaxation& r, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& y, double lambda) {
  const int n = r.n;
  const ComplexPop& q = r.scaled_problem;
  SosCertificate cert;
  cert.lambda = lambda;
  ComplexPolynomial residual = q.objective - ComplexPolynomial::constant(n, lambda);
  const Eigen::VectorXd unscale = Eigen::VectorXd::Constant(n, 1.0 / r.scale);
  for (const auto& blk : r.blocks) {
    using K = RelaxationBlock::Kind;
    if (blk.kind != K::kMoment && blk.kind != K::kLocalizing && blk.kind != K::kLocalizingEquality) continue;
    const int m = static_cast<int>(blk.basis.size());
    SosMultiplier mult;
    mult.constraint = blk.kind == K::kMoment ? -1 : blk.constraint;
    mult.clique = blk.clique;
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(m, m);
    if (blk.kind == K::kLocalizingEquality) {
      // r = -sum_rows y_row q_row, collected as a Hermitian matrix.
      mult.free = true;
      for (size_t k = 0; k < blk.rows.size(); ++k) {
        const auto [a, b, imag] = blk.rows[k];
        const double w = -y(blk.first_row + static_cast<int>(k));
        if (a == b) {
          G(a, a) += w;
        } else if (!imag) {
          G(a, b) += w / 2.0;
          G(b, a) += w / 2.0;
        } else {
          G(a, b) += w / Complex(0.0, 2.0);
          G(b, a) -= w / Complex(0.0, 2.0);
        }
      }
    } else if (blk.scalar) {
      G(0, 0) = z(blk.first_row);
    } else {
      const int N = 2 * m;
      Eigen::MatrixXd W = svec_to_matrix(N, z.segment(blk.first_row, N * (N + 1) / 2));
      G = (2.0 * lambda_reduce(W)).transpose();
    }
    const ComplexPolynomial sigma = gram_polynomial(n, blk.basis, G);
    const ComplexPolynomial g =
        mult.constraint < 0 ? ComplexPolynomial::constant(n, 1.0) : q.constraints[mult.constraint].g;
    residual -= sigma * g;
    mult.poly = sigma.scale_vars(unscale);
    // Gram in the original variables.
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) G(a, b) *= std::pow(r.scale, -(degree(blk.basis[a]) + degree(blk.basis[b])));
    mult.gram = G;
    cert.multipliers.push_back(std::move(mult));
  }
  cert.identity_residual = max_abs_coefficient(residual);
  return cert;
}

SosProgram build_sos_dual(const MomentRelaxation& r) {
  const ConicProgram& P = r.program;
  const int nz = P.num_cone_rows();
  const int ny = P.num_equalities();
  const int nx = P.num_variables();
  SosProgram s;
  s.cone_rows = nz;
  s.num_equalities = ny;
  ConicProgram& D = s.program;
  // min h^T z + b^T w - offset  s.t.  G^T z + A^T w = -c,  z in K
  D.c.resize(nz + ny);
  D.c << P.h, P.b;
  D.offset = -P.offset;
  std::vector<Eigen::Triplet<double>> a;
  for (int k = 0; k < P.G.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(P.G, k); it; ++it) a.emplace_back(it.col(), it.row(), it.value());
  for (int k = 0; k < P.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(P.A, k); it; ++it)
      a.emplace_back(it.col(), nz + it.row(), it.value());
  D.A.resize(nx, nz + ny);
  D.A.setFromTriplets(a.begin(), a.end());
  D.b = -P.c;
  std::vector<Eigen::Triplet<double>> g;
  for (int k = 0; k < nz; ++k) g.emplace_back(k, k, -1.0);
  D.G.resize(nz, nz + ny);
  D.G.setFromTriplets(g.begin(), g.end());
  D.h = Eigen::VectorXd::Zero(nz);
  D.cones = P.cones;
  return s;
}

SosCertificate sos_from_solution(const MomentRelaxation& r, const SosProgram& s, const Eigen::VectorXd& x) {
  const double value = s.program.c.dot(x) + s.program.offset;
  return sos_certificate(r, x.head(s.cone_rows), x.segment(s.cone_rows, s.num_equalities), -value);
}

}  // namespace cpop
