#include "cpop/conic.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "cpop/poly.hpp"

namespace cpop {

int cone_rows(const Cone& k) {
  return k.type == ConeType::kPsd ? k.size * (k.size + 1) / 2 : k.size;
}

int svec_index(int m, int i, int j) {
  if (i < j) std::swap(i, j);
  // column j starts after columns 0..j-1 of lengths m, m-1, ...
  return j * m - j * (j - 1) / 2 + (i - j);
}

long ConicProgram::psd_size() const {
  long total = 0;
  for (const Cone& k : cones)
    if (k.type == ConeType::kPsd) total += static_cast<long>(k.size) * (k.size + 1) / 2;
  return total;
}

int ConicProgram::largest_psd_order() const {
  int best = 0;
  for (const Cone& k : cones)
    if (k.type == ConeType::kPsd) best = std::max(best, k.size);
  return best;
}

void ConicProgram::validate() const {
  const int n = num_variables();
  if (A.rows() != b.size() || (A.rows() > 0 && A.cols() != n))
    throw StructuralError("conic program: equality block dimensions inconsistent");
  if (G.rows() != h.size() || (G.rows() > 0 && G.cols() != n))
    throw StructuralError("conic program: cone block dimensions inconsistent");
  int rows = 0;
  for (const Cone& k : cones) {
    if (k.size <= 0) throw StructuralError("conic program: empty cone block");
    rows += cone_rows(k);
  }
  if (rows != h.size()) throw StructuralError("conic program: cone blocks do not partition s");
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& o) {
  constant += o.constant;
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  return *this;
}

AffineExpr& AffineExpr::operator*=(double f) {
  constant *= f;
  for (auto& t : terms) t.second *= f;
  return *this;
}

bool AffineExpr::is_constant() const {
  for (const auto& t : terms)
    if (t.second != 0.0) return false;
  return true;
}

int ConicBuilder::add_variable(double cost) {
  cost_.push_back(cost);
  return static_cast<int>(cost_.size()) - 1;
}

void ConicBuilder::add_equality(const AffineExpr& e) {
  const int row = static_cast<int>(b_.size());
  for (const auto& [v, coef] : e.terms) a_trip_.emplace_back(row, v, coef);
  b_.push_back(-e.constant);
}

void ConicBuilder::add_cone_row(const AffineExpr& e, double scale) {
  const int row = static_cast<int>(h_.size());
  for (const auto& [v, coef] : e.terms) g_trip_.emplace_back(row, v, -coef * scale);
  h_.push_back(e.constant * scale);
}

void ConicBuilder::add_nonnegative(const AffineExpr& e) {
  add_cone_row(e, 1.0);
  if (!cones_.empty() && cones_.back().type == ConeType::kNonnegative)
    cones_.back().size += 1;
  else
    cones_.push_back({ConeType::kNonnegative, 1});
}

void ConicBuilder::add_second_order(const std::vector<AffineExpr>& e) {
  if (e.empty()) throw StructuralError("second-order cone needs at least one entry");
  for (const auto& x : e) add_cone_row(x, 1.0);
  cones_.push_back({ConeType::kSecondOrder, static_cast<int>(e.size())});
}

void ConicBuilder::add_psd(int m, const std::vector<AffineExpr>& lower) {
  if (static_cast<int>(lower.size()) != m * (m + 1) / 2)
    throw StructuralError("PSD block: wrong number of lower-triangle entries");
  const double r2 = std::sqrt(2.0);
  int k = 0;
  for (int j = 0; j < m; ++j)
    for (int i = j; i < m; ++i, ++k) add_cone_row(lower[k], i == j ? 1.0 : r2);
  cones_.push_back({ConeType::kPsd, m});
}

void ConicBuilder::add_hermitian_psd(
    int m, const std::function<std::pair<AffineExpr, AffineExpr>(int, int)>& entry) {
  std::vector<std::pair<AffineExpr, AffineExpr>> z(m * (m + 1) / 2);
  for (int j = 0; j < m; ++j)
    for (int i = j; i < m; ++i) z[svec_index(m, i, j)] = entry(i, j);
  auto at = [&](int i, int j) -> std::pair<AffineExpr, AffineExpr> {
    if (i >= j) return z[svec_index(m, i, j)];
    auto e = z[svec_index(m, j, i)];
    e.second *= -1.0;
    return e;
  };
  // [[Re Z, -Im Z], [Im Z, Re Z]], lower triangle
  std::vector<AffineExpr> lower;
  lower.reserve(m * (2 * m + 1));
  for (int c = 0; c < 2 * m; ++c)
    for (int r = c; r < 2 * m; ++r) {
      if (r < m)
        lower.push_back(at(r, c).first);
      else if (c < m)
        lower.push_back(at(r - m, c).second);
      else
        lower.push_back(at(r - m, c - m).first);
    }
  add_psd(2 * m, lower);
}

ConicProgram ConicBuilder::build() const {
  ConicProgram p;
  const int n = num_variables();
  p.c = Eigen::Map<const Eigen::VectorXd>(cost_.data(), n);
  p.offset = offset_;
  p.A.resize(static_cast<int>(b_.size()), n);
  p.A.setFromTriplets(a_trip_.begin(), a_trip_.end());
  p.b = Eigen::Map<const Eigen::VectorXd>(b_.data(), b_.size());
  p.G.resize(static_cast<int>(h_.size()), n);
  p.G.setFromTriplets(g_trip_.begin(), g_trip_.end());
  p.h = Eigen::Map<const Eigen::VectorXd>(h_.data(), h_.size());
  p.cones = cones_;
  return p;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kPrimalInfeasible: return "primal_infeasible";
    case SolveStatus::kDualInfeasible: return "unbounded";
    case SolveStatus::kNumericalLimit: return "numerical_limit";
  }
  return "unknown";
}

Eigen::MatrixXd svec_to_matrix(int m, const Eigen::Ref<const Eigen::VectorXd>& v) {
  Eigen::MatrixXd M(m, m);
  const double r2 = std::sqrt(2.0);
  int k = 0;
  for (int j = 0; j < m; ++j)
    for (int i = j; i < m; ++i, ++k) {
      M(i, j) = i == j ? v(k) : v(k) / r2;
      M(j, i) = M(i, j);
    }
  return M;
}

Eigen::VectorXd matrix_to_svec(const Eigen::MatrixXd& M) {
  const int m = static_cast<int>(M.rows());
  Eigen::VectorXd v(m * (m + 1) / 2);
  const double r2 = std::sqrt(2.0);
  int k = 0;
  for (int j = 0; j < m; ++j)
    for (int i = j; i < m; ++i, ++k) v(k) = i == j ? M(i, i) : r2 * 0.5 * (M(i, j) + M(j, i));
  return v;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Block {
  Cone cone;
  int off;
  int rows;
};

std::vector<Block> layout(const std::vector<Cone>& cones) {
  std::vector<Block> blocks;
  int off = 0;
  for (const Cone& k : cones) {
    blocks.push_back({k, off, cone_rows(k)});
    off += cone_rows(k);
  }
  return blocks;
}

double soc_jnorm2(const Eigen::Ref<const VectorXd>& u) {
  return u(0) * u(0) - u.tail(u.size() - 1).squaredNorm();
}

// Smallest "eigenvalue" of a cone element (LP entries, u0 - |u1|, PSD eigenvalues).
double block_min(const Block& bk, const Eigen::Ref<const VectorXd>& u) {
  switch (bk.cone.type) {
    case ConeType::kNonnegative: return u.minCoeff();
    case ConeType::kSecondOrder: return u(0) - u.tail(bk.rows - 1).norm();
    case ConeType::kPsd: {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(svec_to_matrix(bk.cone.size, u),
                                                 Eigen::EigenvaluesOnly);
      return es.eigenvalues()(0);
    }
  }
  return 0.0;
}

double block_max_step(const Block& bk, const Eigen::Ref<const VectorXd>& u,
                      const Eigen::Ref<const VectorXd>& du) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double best = inf;
  switch (bk.cone.type) {
    case ConeType::kNonnegative:
      for (int i = 0; i < bk.rows; ++i)
        if (du(i) < 0) best = std::min(best, -u(i) / du(i));
      return std::max(best, 0.0);
    case ConeType::kSecondOrder: {
      const double a = soc_jnorm2(du);
      const double bb = u(0) * du(0) - u.tail(bk.rows - 1).dot(du.tail(bk.rows - 1));
      const double c = std::max(soc_jnorm2(u), 0.0);
      // q(t) = c + 2 bb t + a t^2 must stay nonnegative together with u0 + t du0.
      if (du(0) < 0) best = -u(0) / du(0);
      if (a == 0.0) {
        if (bb < 0) best = std::min(best, -c / (2 * bb));
      } else {
        const double disc = bb * bb - a * c;
        if (disc >= 0) {
          const double sq = std::sqrt(disc);
          // numerically stable roots
          const double qq = -(bb + std::copysign(sq, bb));
          double r1 = qq / a;
          double r2 = qq != 0.0 ? c / qq : inf;
          for (double r : {r1, r2})
            if (r > 0) best = std::min(best, r);
        }
      }
      return std::max(best, 0.0);
    }
    case ConeType::kPsd: {
      const int m = bk.cone.size;
      MatrixXd U = svec_to_matrix(m, u);
      Eigen::LLT<MatrixXd> llt(U);
      if (llt.info() != Eigen::Success) return 0.0;
      MatrixXd D = svec_to_matrix(m, du);
      MatrixXd Linv_D = llt.matrixL().solve(D);
      MatrixXd M = llt.matrixL().solve(Linv_D.transpose());
      Eigen::SelfAdjointEigenSolver<MatrixXd> es((M + M.transpose()) / 2, Eigen::EigenvaluesOnly);
      const double lmin = es.eigenvalues()(0);
      return lmin >= 0 ? inf : -1.0 / lmin;
    }
  }
  return best;
}

VectorXd identity_element(const std::vector<Block>& blocks, int N) {
  VectorXd e = VectorXd::Zero(N);
  for (const Block& bk : blocks) {
    switch (bk.cone.type) {
      case ConeType::kNonnegative: e.segment(bk.off, bk.rows).setOnes(); break;
      case ConeType::kSecondOrder: e(bk.off) = 1.0; break;
      case ConeType::kPsd:
        for (int i = 0; i < bk.cone.size; ++i) e(bk.off + svec_index(bk.cone.size, i, i)) = 1.0;
        break;
    }
  }
  return e;
}

int cone_degree(const std::vector<Block>& blocks) {
  int nu = 0;
  for (const Block& bk : blocks) nu += bk.cone.type == ConeType::kNonnegative ? bk.rows
                                     : bk.cone.type == ConeType::kSecondOrder ? 1
                                                                               : bk.cone.size;
  return nu;
}

VectorXd jordan_product(const std::vector<Block>& blocks, const VectorXd& u, const VectorXd& v) {
  VectorXd r(u.size());
  for (const Block& bk : blocks) {
    auto us = u.segment(bk.off, bk.rows);
    auto vs = v.segment(bk.off, bk.rows);
    auto rs = r.segment(bk.off, bk.rows);
    switch (bk.cone.type) {
      case ConeType::kNonnegative: rs = us.cwiseProduct(vs); break;
      case ConeType::kSecondOrder:
        rs(0) = us.dot(vs);
        rs.tail(bk.rows - 1) = us(0) * vs.tail(bk.rows - 1) + vs(0) * us.tail(bk.rows - 1);
        break;
      case ConeType::kPsd: {
        MatrixXd U = svec_to_matrix(bk.cone.size, us), V = svec_to_matrix(bk.cone.size, vs);
        rs = matrix_to_svec((U * V + V * U) / 2);
        break;
      }
    }
  }
  return r;
}

// Solve lambda o u = v for u, lambda being a scaled point (diagonal in PSD blocks).
VectorXd jordan_divide(const std::vector<Block>& blocks, const VectorXd& lambda, const VectorXd& v) {
  VectorXd r(v.size());
  for (const Block& bk : blocks) {
    auto ls = lambda.segment(bk.off, bk.rows);
    auto vs = v.segment(bk.off, bk.rows);
    auto rs = r.segment(bk.off, bk.rows);
    switch (bk.cone.type) {
      case ConeType::kNonnegative: rs = vs.cwiseQuotient(ls); break;
      case ConeType::kSecondOrder: {
        const int k = bk.rows - 1;
        const double u0 = (ls(0) * vs(0) - ls.tail(k).dot(vs.tail(k))) / soc_jnorm2(ls);
        rs(0) = u0;
        rs.tail(k) = (vs.tail(k) - u0 * ls.tail(k)) / ls(0);
        break;
      }
      case ConeType::kPsd: {
        const int m = bk.cone.size;
        int idx = 0;
        for (int j = 0; j < m; ++j)
          for (int i = j; i < m; ++i, ++idx) {
            const double li = ls(svec_index(m, i, i)), lj = ls(svec_index(m, j, j));
            rs(idx) = 2.0 * vs(idx) / (li + lj);
          }
        break;
      }
    }
  }
  return r;
}

// Nesterov-Todd scaling W with W z = W^{-T} s = lambda.
struct Scaling {
  std::vector<Block> blocks;
  std::vector<VectorXd> lp_w;
  std::vector<double> soc_beta;
  std::vector<VectorXd> soc_v;
  std::vector<MatrixXd> psd_R, psd_Rinv;
  VectorXd lambda;

  enum class Op { kW, kWT, kWinv, kWinvT };

  static Scaling identity(const std::vector<Block>& blocks, int N) {
    Scaling w;
    w.blocks = blocks;
    for (const Block& bk : blocks) {
      switch (bk.cone.type) {
        case ConeType::kNonnegative: w.lp_w.push_back(VectorXd::Ones(bk.rows)); break;
        case ConeType::kSecondOrder: {
          VectorXd v = VectorXd::Zero(bk.rows);
          v(0) = 1.0;
          w.soc_beta.push_back(1.0);
          w.soc_v.push_back(v);
          break;
        }
        case ConeType::kPsd:
          w.psd_R.push_back(MatrixXd::Identity(bk.cone.size, bk.cone.size));
          w.psd_Rinv.push_back(MatrixXd::Identity(bk.cone.size, bk.cone.size));
          break;
      }
    }
    w.lambda = identity_element(blocks, N);
    return w;
  }

  // Returns false if s or z is not in the cone interior.
  bool compute(const std::vector<Block>& bl, const VectorXd& s, const VectorXd& z) {
    blocks = bl;
    lp_w.clear();
    soc_beta.clear();
    soc_v.clear();
    psd_R.clear();
    psd_Rinv.clear();
    lambda = VectorXd::Zero(s.size());
    for (const Block& bk : blocks) {
      auto ss = s.segment(bk.off, bk.rows);
      auto zs = z.segment(bk.off, bk.rows);
      switch (bk.cone.type) {
        case ConeType::kNonnegative: {
          if (ss.minCoeff() <= 0 || zs.minCoeff() <= 0) return false;
          VectorXd w = ss.cwiseQuotient(zs).cwiseSqrt();
          lp_w.push_back(w);
          lambda.segment(bk.off, bk.rows) = ss.cwiseProduct(zs).cwiseSqrt();
          break;
        }
        case ConeType::kSecondOrder: {
          const int k = bk.rows;
          const double a2 = soc_jnorm2(ss), b2 = soc_jnorm2(zs);
          if (a2 <= 0 || b2 <= 0 || ss(0) <= 0 || zs(0) <= 0) return false;
          const double a = std::sqrt(a2), b = std::sqrt(b2);
          VectorXd sb = ss / a, zb = zs / b;
          const double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
          VectorXd wb(k);
          wb(0) = (sb(0) + zb(0)) / (2 * gamma);
          wb.tail(k - 1) = (sb.tail(k - 1) - zb.tail(k - 1)) / (2 * gamma);
          const double beta = std::sqrt(a / b);
          VectorXd v = wb;
          v(0) += 1.0;
          v /= std::sqrt(2.0 * (wb(0) + 1.0));
          soc_beta.push_back(beta);
          soc_v.push_back(v);
          break;
        }
        case ConeType::kPsd: {
          const int m = bk.cone.size;
          Eigen::LLT<MatrixXd> ls(svec_to_matrix(m, ss)), lz(svec_to_matrix(m, zs));
          if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
          MatrixXd Ls = ls.matrixL(), Lz = lz.matrixL();
          Eigen::JacobiSVD<MatrixXd> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
          VectorXd sig = svd.singularValues();
          if (sig.minCoeff() <= 0) return false;
          VectorXd isq = sig.cwiseSqrt().cwiseInverse();
          MatrixXd R = Ls * svd.matrixV() * isq.asDiagonal();
          MatrixXd Rinv = sig.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() *
                          Ls.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(m, m));
          psd_R.push_back(R);
          psd_Rinv.push_back(Rinv);
          for (int i = 0; i < m; ++i) lambda(bk.off + svec_index(m, i, i)) = sig(i);
          break;
        }
      }
    }
    // second-order lambda computed with the operator for consistency
    size_t si = 0;
    for (const Block& bk : blocks) {
      if (bk.cone.type != ConeType::kSecondOrder) continue;
      VectorXd zs = z.segment(bk.off, bk.rows);
      lambda.segment(bk.off, bk.rows) = soc_apply(si, zs, Op::kW);
      ++si;
    }
    return true;
  }

  VectorXd soc_apply(size_t i, const VectorXd& u, Op op) const {
    const VectorXd& v = soc_v[i];
    const double beta = soc_beta[i];
    VectorXd r;
    if (op == Op::kW || op == Op::kWT) {
      // beta (2 v v^T - J) u
      r = 2.0 * v.dot(u) * v;
      r(0) -= u(0);
      r.tail(u.size() - 1) += u.tail(u.size() - 1);
      r *= beta;
    } else {
      // (1/beta) (2 J v v^T J - J) u
      VectorXd Jv = v;
      Jv.tail(v.size() - 1) *= -1.0;
      r = 2.0 * Jv.dot(u) * Jv;
      r(0) -= u(0);
      r.tail(u.size() - 1) += u.tail(u.size() - 1);
      r /= beta;
    }
    return r;
  }

  VectorXd apply(const VectorXd& u, Op op) const {
    VectorXd r(u.size());
    size_t li = 0, si = 0, pi = 0;
    for (const Block& bk : blocks) {
      auto us = u.segment(bk.off, bk.rows);
      auto rs = r.segment(bk.off, bk.rows);
      switch (bk.cone.type) {
        case ConeType::kNonnegative:
          if (op == Op::kW || op == Op::kWT)
            rs = us.cwiseProduct(lp_w[li]);
          else
            rs = us.cwiseQuotient(lp_w[li]);
          ++li;
          break;
        case ConeType::kSecondOrder:
          rs = soc_apply(si, us, op);
          ++si;
          break;
        case ConeType::kPsd: {
          const MatrixXd& R = psd_R[pi];
          const MatrixXd& Ri = psd_Rinv[pi];
          MatrixXd U = svec_to_matrix(bk.cone.size, us);
          MatrixXd V;
          switch (op) {
            case Op::kW: V = R.transpose() * U * R; break;
            case Op::kWT: V = R * U * R.transpose(); break;
            case Op::kWinv: V = Ri.transpose() * U * Ri; break;
            case Op::kWinvT: V = Ri * U * Ri.transpose(); break;
          }
          rs = matrix_to_svec(V);
          ++pi;
          break;
        }
      }
    }
    return r;
  }

  // W^{-T} applied to every column of a dense matrix.
  MatrixXd apply_cols(const MatrixXd& G, Op op) const {
    MatrixXd R(G.rows(), G.cols());
    for (Eigen::Index j = 0; j < G.cols(); ++j) R.col(j) = apply(G.col(j), op);
    return R;
  }
};

class KktSolver {
 public:
  KktSolver(const MatrixXd& A, const MatrixXd& G) : A_(A), G_(G) {}

  bool factor(const Scaling& W) {
    W_ = &W;
    WiG_ = W.apply_cols(G_, Scaling::Op::kWinvT);
    MatrixXd K1 = WiG_.transpose() * WiG_;
    if (A_.rows() > 0) K1.noalias() += A_.transpose() * A_;
    const Eigen::Index n = K1.rows();
    if (n == 0) return true;
    double reg = 0.0;
    const double scale = std::max(1.0, K1.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 8; ++attempt) {
      MatrixXd K = K1;
      if (reg > 0) K.diagonal().array() += reg;
      llt1_.compute(K);
      if (llt1_.info() == Eigen::Success) break;
      reg = reg == 0.0 ? 1e-14 * scale : reg * 100.0;
      if (attempt == 7) return false;
    }
    if (A_.rows() > 0) {
      MatrixXd KiAt = llt1_.solve(A_.transpose());
      MatrixXd S = A_ * KiAt;
      const double sscale = std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());
      reg = 0.0;
      for (int attempt = 0; attempt < 8; ++attempt) {
        MatrixXd T = S;
        if (reg > 0) T.diagonal().array() += reg;
        llt2_.compute(T);
        if (llt2_.info() == Eigen::Success) break;
        reg = reg == 0.0 ? 1e-14 * sscale : reg * 100.0;
        if (attempt == 7) return false;
      }
    }
    return true;
  }

  // Solves [0 A^T G^T; A 0 0; G 0 -W^T W] (dx, dy, dz) = (ux, uy, uz).
  void solve(const VectorXd& ux, const VectorXd& uy, const VectorXd& uz, VectorXd& dx,
             VectorXd& dy, VectorXd& dz) const {
    solve_once(ux, uy, uz, dx, dy, dz);
    for (int it = 0; it < 3; ++it) {
      VectorXd e1 = ux - G_.transpose() * dz;
      if (A_.rows() > 0) e1 -= A_.transpose() * dy;
      VectorXd e2 = uy;
      if (A_.rows() > 0) e2 -= A_ * dx;
      VectorXd e3 = uz - G_ * dx + W_->apply(W_->apply(dz, Scaling::Op::kW), Scaling::Op::kWT);
      const double err = std::max({e1.lpNorm<Eigen::Infinity>(), e2.size() ? e2.lpNorm<Eigen::Infinity>() : 0.0,
                                   e3.size() ? e3.lpNorm<Eigen::Infinity>() : 0.0});
      const double ref = std::max({1e-300, ux.size() ? ux.lpNorm<Eigen::Infinity>() : 0.0,
                                   uy.size() ? uy.lpNorm<Eigen::Infinity>() : 0.0,
                                   uz.size() ? uz.lpNorm<Eigen::Infinity>() : 0.0});
      if (err <= 1e-15 * ref) break;
      VectorXd cx, cy, cz;
      solve_once(e1, e2, e3, cx, cy, cz);
      dx += cx;
      dy += cy;
      dz += cz;
    }
  }

 private:
  void solve_once(const VectorXd& ux, const VectorXd& uy, const VectorXd& uz, VectorXd& dx,
                  VectorXd& dy, VectorXd& dz) const {
    VectorXd wuz = W_->apply(uz, Scaling::Op::kWinvT);
    VectorXd rhs = ux + WiG_.transpose() * wuz;
    if (A_.rows() > 0) {
      rhs += A_.transpose() * uy;
      VectorXd t = llt1_.solve(rhs);
      dy = llt2_.solve(A_ * t - uy);
      dx = llt1_.solve(rhs - A_.transpose() * dy);
    } else {
      dy = VectorXd(0);
      dx = rhs.size() ? VectorXd(llt1_.solve(rhs)) : VectorXd(0);
    }
    dz = W_->apply(VectorXd(WiG_ * dx - wuz), Scaling::Op::kWinv);
  }

  const MatrixXd& A_;
  const MatrixXd& G_;
  const Scaling* W_ = nullptr;
  MatrixXd WiG_;
  Eigen::LLT<MatrixXd> llt1_, llt2_;
};

// Keeps a maximal independent subset of equality rows; returns false if the
// dropped rows are inconsistent with the kept ones.
bool reduce_equalities(MatrixXd& A, VectorXd& b, std::vector<int>& kept) {
  kept.clear();
  if (A.rows() == 0) return true;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(A.transpose());
  qr.setThreshold(1e-11);
  const Eigen::Index r = qr.rank();
  if (r == A.rows()) {
    for (int i = 0; i < A.rows(); ++i) kept.push_back(i);
    return true;
  }
  std::vector<int> idx;
  for (Eigen::Index i = 0; i < r; ++i) idx.push_back(qr.colsPermutation().indices()(i));
  std::sort(idx.begin(), idx.end());
  MatrixXd Ak(r, A.cols());
  VectorXd bk(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    Ak.row(i) = A.row(idx[i]);
    bk(i) = b(idx[i]);
  }
  // consistency: b must lie in range(A) restricted to kept rows' implication
  VectorXd x0 = Ak.colPivHouseholderQr().solve(bk);
  const double res = (A * x0 - b).lpNorm<Eigen::Infinity>();
  A = Ak;
  b = bk;
  kept = idx;
  return res <= 1e-8 * std::max(1.0, b.lpNorm<Eigen::Infinity>());
}

}  // namespace

double max_step(const std::vector<Cone>& cones, const VectorXd& u, const VectorXd& du) {
  double best = std::numeric_limits<double>::infinity();
  for (const Block& bk : layout(cones))
    best = std::min(best, block_max_step(bk, u.segment(bk.off, bk.rows), du.segment(bk.off, bk.rows)));
  return best;
}

double cone_violation(const std::vector<Cone>& cones, const VectorXd& u) {
  double worst = 0.0;
  for (const Block& bk : layout(cones))
    worst = std::max(worst, -block_min(bk, u.segment(bk.off, bk.rows)));
  return worst;
}

SolveResult solve_program(const ConicProgram& p, const SolverOptions& opts) {
  p.validate();
  const int n = p.num_variables();
  const int N = p.num_cone_rows();
  const std::vector<Block> blocks = layout(p.cones);
  MatrixXd A = MatrixXd(p.A);
  VectorXd b = p.b;
  const MatrixXd G = MatrixXd(p.G);
  const VectorXd& h = p.h;
  const VectorXd& c = p.c;
  const int m_orig = p.num_equalities();

  SolveResult res;
  res.x = VectorXd::Zero(n);
  res.s = VectorXd::Zero(N);
  res.y = VectorXd::Zero(m_orig);
  res.z = VectorXd::Zero(N);

  std::vector<int> kept;
  if (!reduce_equalities(A, b, kept)) {
    // Inconsistent equalities: certificate y with A^T y = 0, b^T y < 0.
    res.status = SolveStatus::kPrimalInfeasible;
    return res;
  }
  const int m = static_cast<int>(A.rows());
  const int nu = cone_degree(blocks);
  const VectorXd e = identity_element(blocks, N);

  const double resx0 = std::max(1.0, c.norm());
  const double resy0 = std::max(1.0, b.size() ? b.norm() : 0.0);
  const double resz0 = std::max(1.0, h.size() ? h.norm() : 0.0);

  KktSolver kkt(A, G);
  Scaling W = Scaling::identity(blocks, N);
  if (!kkt.factor(W)) {
    res.status = SolveStatus::kNumericalLimit;
    return res;
  }

  VectorXd x, y, z, s, tmp;
  kkt.solve(VectorXd::Zero(n), b, h, x, y, tmp);
  s = -tmp;
  {
    VectorXd x2;
    kkt.solve(-c, VectorXd::Zero(m), VectorXd::Zero(N), x2, y, z);
  }
  if (N > 0) {
    double smin = std::numeric_limits<double>::infinity(), zmin = smin;
    for (const Block& bk : blocks) {
      smin = std::min(smin, block_min(bk, s.segment(bk.off, bk.rows)));
      zmin = std::min(zmin, block_min(bk, z.segment(bk.off, bk.rows)));
    }
    if (smin <= 1e-8 * std::max(1.0, s.norm())) s += (1.0 - smin) * e;
    if (zmin <= 1e-8 * std::max(1.0, z.norm())) z += (1.0 - zmin) * e;
  }
  double tau = 1.0, kappa = 1.0;

  struct Best {
    double merit = std::numeric_limits<double>::infinity();
    VectorXd x, y, z, s;
    double tau = 1;
    double pres = 0, dres = 0, gap = 0;
    int iter = 0;
  } best;
  // Smallest infeasibility residuals seen, with their iterates (for inaccurate certificates).
  struct Ray {
    double res = std::numeric_limits<double>::infinity();
    VectorXd x, y, z, s;
  } best_pinf, best_dinf;

  const double step_frac = 0.99;
  SolveStatus status = SolveStatus::kNumericalLimit;
  int iter = 0;
  double pres = 0, dres = 0, gap = 0;
  for (;; ++iter) {
    VectorXd Ax = m ? VectorXd(A * x) : VectorXd(0);
    VectorXd Aty = m ? VectorXd(A.transpose() * y) : VectorXd::Zero(n);
    VectorXd Gx = G * x;
    VectorXd Gtz = G.transpose() * z;
    const double cx = c.dot(x), by = m ? b.dot(y) : 0.0, hz = h.dot(z);
    VectorXd rx = Aty + Gtz + c * tau;
    VectorXd ry = b * tau - Ax;
    VectorXd rz = h * tau - Gx - s;
    const double rt = -cx - by - hz - kappa;

    pres = std::max(m ? ry.norm() / resy0 : 0.0, N ? rz.norm() / resz0 : 0.0) / tau;
    dres = rx.norm() / resx0 / tau;
    const double pcost = cx / tau, dcost = -(by + hz) / tau;
    gap = s.dot(z) / (tau * tau);
    const double gscale = 1.0 + std::abs(pcost);
    const double gap_measure = std::max(gap, std::abs(pcost - dcost)) / gscale;
    double pinfres = std::numeric_limits<double>::infinity();
    double dinfres = pinfres;
    if (hz + by < 0) pinfres = (Aty + Gtz).norm() / resx0 / (-(hz + by));
    if (cx < 0)
      dinfres = std::max(m ? Ax.norm() / resy0 : 0.0, N ? (Gx + s).norm() / resz0 : 0.0) / (-cx);

    if (opts.verbose)
      std::fprintf(stderr, "%3d pcost % .8e dcost % .8e gap %.2e pres %.2e dres %.2e k/t %.2e pinf %.1e dinf %.1e\n",
                   iter, pcost, dcost, gap, pres, dres, kappa / tau, pinfres, dinfres);

    if (pinfres < best_pinf.res) best_pinf = {pinfres, x, y, z, s};
    if (dinfres < best_dinf.res) best_dinf = {dinfres, x, y, z, s};
    const double merit = std::max({pres, dres, gap_measure});
    if (merit < best.merit) {
      best.merit = merit;
      best.x = x;
      best.y = y;
      best.z = z;
      best.s = s;
      best.tau = tau;
      best.pres = pres;
      best.dres = dres;
      best.gap = gap;
      best.iter = iter;
    }

    if (pres <= opts.feas_tol && dres <= opts.feas_tol && gap_measure <= opts.gap_tol) {
      status = SolveStatus::kOptimal;
      break;
    }
    if (pinfres <= opts.feas_tol) {
      status = SolveStatus::kPrimalInfeasible;
      break;
    }
    if (dinfres <= opts.feas_tol) {
      status = SolveStatus::kDualInfeasible;
      break;
    }
    if (iter >= opts.max_iterations) break;

    if (!W.compute(blocks, s, z) || !kkt.factor(W)) break;
    const VectorXd& lambda = W.lambda;
    const double mu = (s.dot(z) + tau * kappa) / (nu + 1);

    VectorXd x2, y2, z2;
    kkt.solve(-c, b, h, x2, y2, z2);
    const double denom = kappa / tau - c.dot(x2) - (m ? b.dot(y2) : 0.0) - h.dot(z2);

    VectorXd dx, dy, dz, ds;
    double dtau = 0, dkappa = 0;
    VectorXd ds_aff_scaled, dz_aff_scaled;
    double dtau_aff = 0, dkappa_aff = 0;
    double sigma = 0.0;
    double alpha = 0.0;
    bool failed = false;
    for (int pass = 0; pass < 2; ++pass) {
      const bool affine = pass == 0;
      const double eta = affine ? 1.0 : 1.0 - sigma;
      VectorXd bs = -jordan_product(blocks, lambda, lambda);
      double bk = -tau * kappa;
      if (!affine) {
        bs += sigma * mu * e - jordan_product(blocks, ds_aff_scaled, dz_aff_scaled);
        bk += sigma * mu - dtau_aff * dkappa_aff;
      }
      VectorXd ldb = jordan_divide(blocks, lambda, bs);
      VectorXd x1, y1, z1;
      kkt.solve(-eta * rx, eta * ry, VectorXd(eta * rz - W.apply(ldb, Scaling::Op::kWT)), x1, y1, z1);
      dtau = (-eta * rt + c.dot(x1) + (m ? b.dot(y1) : 0.0) + h.dot(z1) + bk / tau) / denom;
      dx = x1 + dtau * x2;
      dy = m ? VectorXd(y1 + dtau * y2) : VectorXd(0);
      dz = z1 + dtau * z2;
      VectorXd Wdz = W.apply(dz, Scaling::Op::kW);
      VectorXd WiTds = ldb - Wdz;
      ds = W.apply(WiTds, Scaling::Op::kWT);
      dkappa = (bk - kappa * dtau) / tau;
      if (!std::isfinite(dtau) || !dx.allFinite() || !dz.allFinite() || !ds.allFinite()) {
        failed = true;
        break;
      }

      double amax = std::min(max_step(p.cones, s, ds), max_step(p.cones, z, dz));
      if (dtau < 0) amax = std::min(amax, -tau / dtau);
      if (dkappa < 0) amax = std::min(amax, -kappa / dkappa);
      if (affine) {
        const double a_aff = std::min(1.0, amax);
        sigma = std::pow(1.0 - a_aff, 3);
        ds_aff_scaled = WiTds;
        dz_aff_scaled = Wdz;
        dtau_aff = dtau;
        dkappa_aff = dkappa;
      } else {
        alpha = std::min(1.0, step_frac * amax);
      }
    }
    if (failed || alpha < 1e-12) break;
    x += alpha * dx;
    if (m) y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
  }

  auto expand_y = [&](const VectorXd& yr) {
    VectorXd full = VectorXd::Zero(m_orig);
    for (size_t i = 0; i < kept.size(); ++i) full(kept[i]) = yr(static_cast<Eigen::Index>(i));
    return full;
  };

  // Stalled without a certificate: accept an infeasibility certificate at the loose
  // tolerance when the optimality conditions are further off than that.
  if (status == SolveStatus::kNumericalLimit && best.merit > opts.inaccurate_tol) {
    const Ray* ray = nullptr;
    if (best_dinf.res <= opts.inaccurate_tol && best_dinf.res <= best_pinf.res) {
      status = SolveStatus::kDualInfeasible;
      ray = &best_dinf;
    } else if (best_pinf.res <= opts.inaccurate_tol) {
      status = SolveStatus::kPrimalInfeasible;
      ray = &best_pinf;
    }
    if (ray) {
      x = ray->x;
      y = ray->y;
      z = ray->z;
      s = ray->s;
      res.inaccurate = true;
    }
  }
  // Stalled close to a solution: report the best iterate as an inaccurate optimum.
  bool use_best = status == SolveStatus::kNumericalLimit;
  if (use_best && best.merit <= opts.inaccurate_optimal_tol) {
    status = SolveStatus::kOptimal;
    res.inaccurate = true;
  }
  res.status = status;
  res.iterations = iter;
  if (status == SolveStatus::kOptimal && !use_best) {
    res.x = x / tau;
    res.s = s / tau;
    res.y = expand_y(y / tau);
    res.z = z / tau;
    res.primal_residual = pres;
    res.dual_residual = dres;
    res.gap = gap;
  } else if (status == SolveStatus::kPrimalInfeasible) {
    const double scale = -(h.dot(z) + (m ? b.dot(y) : 0.0));
    res.y = expand_y(y / scale);
    res.z = z / scale;
    res.x = x;
    res.s = s;
  } else if (status == SolveStatus::kDualInfeasible) {
    const double scale = -c.dot(x);
    res.x = x / scale;
    res.s = s / scale;
    res.y = expand_y(y);
    res.z = z;
  } else if (use_best) {
    res.x = best.x / best.tau;
    res.s = best.s / best.tau;
    res.y = expand_y(best.y / best.tau);
    res.z = best.z / best.tau;
    res.primal_residual = best.pres;
    res.dual_residual = best.dres;
    res.gap = best.gap;
  }
  if (status == SolveStatus::kOptimal || status == SolveStatus::kNumericalLimit) {
    res.primal_value = c.dot(res.x) + p.offset;
    res.dual_value = -(p.b.dot(res.y) + h.dot(res.z)) + p.offset;
  } else if (status == SolveStatus::kPrimalInfeasible) {
    res.primal_value = std::numeric_limits<double>::infinity();
    res.dual_value = std::numeric_limits<double>::infinity();
  } else {
    res.primal_value = -std::numeric_limits<double>::infinity();
    res.dual_value = -std::numeric_limits<double>::infinity();
  }
  return res;
}

CertificateReport verify_certificate(const ConicProgram& p, const SolveResult& r, double tol) {
  CertificateReport rep;
  const MatrixXd A = MatrixXd(p.A), G = MatrixXd(p.G);
  const double resx0 = std::max(1.0, p.c.norm());
  const double resy0 = std::max(1.0, p.b.size() ? p.b.norm() : 0.0);
  const double resz0 = std::max(1.0, p.h.size() ? p.h.norm() : 0.0);
  double pr = 0.0;
  if (p.num_equalities() > 0) pr = std::max(pr, (A * r.x - p.b).norm() / resy0);
  if (p.num_cone_rows() > 0) pr = std::max(pr, (G * r.x + r.s - p.h).norm() / resz0);
  VectorXd dr = G.transpose() * r.z + p.c;
  if (p.num_equalities() > 0) dr += A.transpose() * r.y;
  rep.primal_residual = pr;
  rep.dual_residual = dr.norm() / resx0;
  // s must equal h - G x and lie in the cone; measure violation relative to its size
  rep.s_cone_violation = cone_violation(p.cones, r.s) / std::max(1.0, r.s.norm());
  rep.z_cone_violation = cone_violation(p.cones, r.z) / std::max(1.0, r.z.norm());
  const double pval = p.c.dot(r.x) + p.offset;
  const double dval = -(p.b.dot(r.y) + p.h.dot(r.z)) + p.offset;
  rep.gap = std::abs(pval - dval) / (1.0 + std::abs(pval));
  const double flag = 10.0 * tol;
  rep.primal_ok = rep.primal_residual <= flag && rep.s_cone_violation <= flag;
  rep.dual_ok = rep.dual_residual <= flag && rep.z_cone_violation <= flag;
  rep.gap_ok = rep.gap <= flag;
  return rep;
}

}  // namespace cpop
