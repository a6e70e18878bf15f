#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpop/conic.hpp"
#include "cpop/pop.hpp"

namespace cpop {

enum class Sense { kLe, kGe, kEq };

// z^H H z  (sense)  rhs
struct QuadConstraint {
  Eigen::MatrixXcd H;
  Sense sense = Sense::kLe;
  double rhs = 0.0;
};

// ||(z^H P_j z + o_j)_j|| <= bound
struct QuadNormConstraint {
  std::vector<std::pair<Eigen::MatrixXcd, double>> parts;
  double bound = 0.0;
};

// a u^2 + b u + c with u = z^H H z + offset
struct QuadEpigraphCost {
  Eigen::MatrixXcd H;
  double offset = 0.0;
  double a = 0.0, b = 0.0, c = 0.0;
};

// min z^H H0 z + offset subject to the quadratic constraints.
struct QcqpC {
  int n = 0;
  Eigen::MatrixXcd H0;
  double offset = 0.0;
  std::vector<QuadConstraint> constraints;
  std::vector<QuadNormConstraint> norms;
  std::vector<QuadEpigraphCost> costs;

  void validate() const;
  double objective(const Eigen::VectorXcd& z) const;
  double max_violation(const Eigen::VectorXcd& z) const;
};

// Requires every polynomial to be a Hermitian form plus a constant.
QcqpC qcqp_from_pop(const ComplexPop& pop);

// Off-diagonal support of all data matrices, as pairs (i < j).
std::vector<std::pair<int, int>> problem_graph(const QcqpC& q);

enum class RelaxForm {
  kComplex,      // SDP-C / SOCP-C
  kReal,         // SDP-R / SOCP-R
  kRealCoupled,  // CSDP-R / CSOCP-R
};

struct ShorRelaxation {
  ConicProgram program;
  RelaxForm form = RelaxForm::kComplex;
  int n = 0;
  bool zero_diag = false;
  // Complex forms: variable of Re/Im Z_ij (i >= j); -1 when absent. Im of the diagonal is absent.
  Eigen::MatrixXi re_var, im_var;
  // Real forms: variable of X_ij on S_2n (i >= j); -1 when absent (or fixed to zero).
  Eigen::MatrixXi x_var;

  Eigen::MatrixXcd complex_matrix(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd real_matrix(const Eigen::VectorXd& x) const;
};

// SDP-C; with cliques given, one PSD block per clique on shared entry variables.
ShorRelaxation build_sdp_c(const QcqpC& q, const std::vector<std::vector<int>>& cliques = {});
// SDP-R on X in S_2n; zero_diag removes the first row and column (X_11 = 0).
ShorRelaxation build_sdp_r(const QcqpC& q, bool zero_diag = false);
// CSDP-R: SDP-R plus A = C and B^T = -B.
ShorRelaxation build_csdp_r(const QcqpC& q);
// Second-order cone relaxations on the given complex edges (default: problem graph).
ShorRelaxation build_socp(const QcqpC& q, RelaxForm form,
                          const std::optional<std::vector<std::pair<int, int>>>& edges = std::nullopt);

std::optional<Eigen::VectorXcd> recover_solution(const Eigen::MatrixXcd& Z,
                                                 double tol_ratio = 1e-6);
std::optional<Eigen::VectorXcd> recover_solution(const Eigen::MatrixXd& X,
                                                 double tol_ratio = 1e-6);

}  // namespace cpop
