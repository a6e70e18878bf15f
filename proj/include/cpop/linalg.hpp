#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "cpop/poly.hpp"

namespace cpop {

constexpr double kDefaultRankTol = 1e-6;

template <typename Scalar>
using RealMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& Z, typename Derived::RealScalar tol = 1e-12) {
  if (Z.rows() != Z.cols()) return false;
  const auto scale = std::max<typename Derived::RealScalar>(1, Z.cwiseAbs().maxCoeff());
  return (Z - Z.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

// Hermitian part (Z + Z^H)/2; used to enforce the symmetry invariant on construction.
template <typename Derived>
auto hermitian_part(const Eigen::MatrixBase<Derived>& Z) {
  using M = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  M r = (Z + Z.adjoint()) / typename Derived::RealScalar(2);
  return r;
}

// The ring homomorphism Z -> [[Re Z, -Im Z], [Im Z, Re Z]] on arbitrary square complex matrices.
template <typename Derived>
RealMatrix<typename Derived::RealScalar> ring_embed(const Eigen::MatrixBase<Derived>& Z) {
  const Eigen::Index n = Z.rows();
  RealMatrix<typename Derived::RealScalar> X(2 * n, 2 * Z.cols());
  X.topLeftCorner(n, Z.cols()) = Z.real();
  X.topRightCorner(n, Z.cols()) = -Z.imag();
  X.bottomLeftCorner(n, Z.cols()) = Z.imag();
  X.bottomRightCorner(n, Z.cols()) = Z.real();
  return X;
}

template <typename Derived>
RealMatrix<typename Derived::RealScalar> lambda_embed(const Eigen::MatrixBase<Derived>& Z) {
  if (!is_hermitian(Z)) throw StructuralError("lambda_embed: matrix is not Hermitian");
  return ring_embed(Z);
}

// Left inverse of lambda_embed: (A + C)/2 + i (B - B^T)/2 for X = [[A, B^T], [B, C]].
template <typename Derived>
ComplexMatrix<typename Derived::Scalar> lambda_reduce(const Eigen::MatrixBase<Derived>& X) {
  using S = typename Derived::Scalar;
  if (X.rows() != X.cols()) throw StructuralError("lambda_reduce: matrix not square");
  if (X.rows() % 2 != 0) throw StructuralError("lambda_reduce: odd order");
  const Eigen::Index n = X.rows() / 2;
  RealMatrix<S> A = X.topLeftCorner(n, n);
  RealMatrix<S> B = X.bottomLeftCorner(n, n);
  RealMatrix<S> C = X.bottomRightCorner(n, n);
  ComplexMatrix<S> Z(n, n);
  Z.real() = (A + C) / S(2);
  Z.imag() = (B - B.transpose()) / S(2);
  return Z;
}

struct HermitianEigen {
  Eigen::VectorXd values;    // descending
  Eigen::MatrixXcd vectors;  // columns match values
};

HermitianEigen hermitian_eig(const Eigen::MatrixXcd& M);
Eigen::VectorXd symmetric_eigenvalues_desc(const Eigen::MatrixXd& M);

struct RankInfo {
  int rank = 0;
  bool borderline = false;  // some eigenvalue ratio within 10x of the threshold
};

RankInfo rank_info(const Eigen::VectorXd& eigenvalues_desc, double tol_ratio = kDefaultRankTol);
int numeric_rank(const Eigen::MatrixXcd& M, double tol_ratio = kDefaultRankTol);
int numeric_rank(const Eigen::MatrixXd& M, double tol_ratio = kDefaultRankTol);

double min_eigenvalue(const Eigen::MatrixXcd& M);
double min_eigenvalue(const Eigen::MatrixXd& M);
bool is_psd(const Eigen::MatrixXcd& M, double tol = 1e-10);

struct RankOneApprox {
  Eigen::VectorXcd u;  // u u^H is the closest rank-one PSD matrix
  double lambda1 = 0;
  double lambda2 = 0;
  bool indefinite = false;  // smallest eigenvalue below -1e-6 * lambda1
};

RankOneApprox nearest_rank1(const Eigen::MatrixXcd& M);

// Rotate u so that its largest-magnitude entry is real and nonnegative.
void normalize_global_phase(Eigen::VectorXcd& u);

}  // namespace cpop
