#include "cpop/linalg.hpp"

namespace cpop {

HermitianEigen hermitian_eig(const Eigen::MatrixXcd& M) {
  if (M.rows() != M.cols()) throw StructuralError("hermitian_eig: matrix not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian_part(M));
  HermitianEigen r;
  r.values = es.eigenvalues().reverse();
  r.vectors = es.eigenvectors().rowwise().reverse();
  return r;
}

Eigen::VectorXd symmetric_eigenvalues_desc(const Eigen::MatrixXd& M) {
  Eigen::MatrixXd S = (M + M.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

RankInfo rank_info(const Eigen::VectorXd& ev, double tol_ratio) {
  RankInfo info;
  if (ev.size() == 0) return info;
  const double cut = tol_ratio * std::max(ev.maxCoeff(), 1e-12);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cut) ++info.rank;
    if (ev(i) > cut / 10.0 && ev(i) < cut * 10.0) info.borderline = true;
  }
  return info;
}

int numeric_rank(const Eigen::MatrixXcd& M, double tol_ratio) {
  return rank_info(hermitian_eig(M).values, tol_ratio).rank;
}

int numeric_rank(const Eigen::MatrixXd& M, double tol_ratio) {
  return rank_info(symmetric_eigenvalues_desc(M), tol_ratio).rank;
}

double min_eigenvalue(const Eigen::MatrixXcd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian_part(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double min_eigenvalue(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::MatrixXd S = (M + M.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool is_psd(const Eigen::MatrixXcd& M, double tol) {
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return min_eigenvalue(M) >= -tol * scale;
}

RankOneApprox nearest_rank1(const Eigen::MatrixXcd& M) {
  RankOneApprox r;
  if (M.rows() == 0) return r;
  HermitianEigen e = hermitian_eig(M);
  r.lambda1 = e.values(0);
  r.lambda2 = e.values.size() > 1 ? e.values(1) : 0.0;
  if (e.values(e.values.size() - 1) < -1e-6 * std::max(r.lambda1, 0.0)) r.indefinite = true;
  r.u = std::sqrt(std::max(r.lambda1, 0.0)) * e.vectors.col(0);
  normalize_global_phase(r.u);
  return r;
}

void normalize_global_phase(Eigen::VectorXcd& u) {
  if (u.size() == 0) return;
  Eigen::Index imax = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    // Ties resolved towards the lowest index; a small slack keeps it stable under roundoff.
    if (std::abs(u(i)) > best * (1.0 + 1e-9)) {
      best = std::abs(u(i));
      imax = i;
    }
  }
  if (best <= 0.0) return;
  u *= std::conj(u(imax)) / best;
  u(imax) = Complex(std::abs(u(imax)), 0.0);
}

}  // namespace cpop
