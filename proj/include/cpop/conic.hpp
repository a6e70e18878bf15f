#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cpop {

// Real conic program
//   minimize    c^T x + offset
//   subject to  A x = b,  s = h - G x,  s in K
// where K is a product of nonnegative orthants, second-order cones and PSD cones.
// PSD blocks of order m occupy m(m+1)/2 rows of s: the lower triangle, column
// major, with off-diagonal entries scaled by sqrt(2).
enum class ConeType { kNonnegative, kSecondOrder, kPsd };

struct Cone {
  ConeType type;
  int size;  // orthant length, second-order cone dimension, or PSD order
};

int cone_rows(const Cone& k);
int svec_index(int m, int i, int j);  // row of entry (i, j) inside a PSD block of order m

struct ConicProgram {
  Eigen::VectorXd c;
  double offset = 0.0;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double> G;
  Eigen::VectorXd h;
  std::vector<Cone> cones;

  int num_variables() const { return static_cast<int>(c.size()); }
  int num_equalities() const { return static_cast<int>(b.size()); }
  int num_cone_rows() const { return static_cast<int>(h.size()); }
  // Total number of scalar entries in PSD blocks.
  long psd_size() const;
  int largest_psd_order() const;
  void validate() const;
};

// Sparse affine expression sum_k coef_k x_k + constant.
struct AffineExpr {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;

  AffineExpr() = default;
  explicit AffineExpr(double c) : constant(c) {}
  void add(int var, double coef) {
    if (coef != 0.0) terms.emplace_back(var, coef);
  }
  AffineExpr& operator+=(const AffineExpr& o);
  AffineExpr& operator*=(double f);
  bool is_constant() const;
};

// Incremental construction of a ConicProgram. Cones are emitted in insertion order.
class ConicBuilder {
 public:
  int add_variable(double cost = 0.0);
  int num_variables() const { return static_cast<int>(cost_.size()); }
  int num_equalities() const { return static_cast<int>(b_.size()); }
  int num_cone_rows() const { return static_cast<int>(h_.size()); }
  void set_cost(int var, double cost) { cost_.at(var) = cost; }
  void add_cost(int var, double cost) { cost_.at(var) += cost; }
  void add_offset(double v) { offset_ += v; }

  void add_equality(const AffineExpr& e);  // e == 0
  void add_nonnegative(const AffineExpr& e);
  void add_second_order(const std::vector<AffineExpr>& e);  // e0 >= ||e_{1:}||
  // Symmetric matrix expression given by its lower triangle entries lower[(i,j)], i >= j,
  // stored column-major.
  void add_psd(int m, const std::vector<AffineExpr>& lower);
  // Hermitian matrix expression Z entered as lambda_embed(Z) (order 2m). entry(i, j) for
  // i >= j returns (Re Z_ij, Im Z_ij).
  void add_hermitian_psd(int m, const std::function<std::pair<AffineExpr, AffineExpr>(int, int)>& entry);

  ConicProgram build() const;

 private:
  void add_cone_row(const AffineExpr& e, double scale);

  std::vector<double> cost_;
  double offset_ = 0.0;
  std::vector<Eigen::Triplet<double>> a_trip_, g_trip_;
  std::vector<double> b_, h_;
  std::vector<Cone> cones_;
};

struct SolverOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iterations = 200;
  // Infeasibility residual accepted when the iteration stalls (weak infeasibility).
  double inaccurate_tol = 1e-4;
  // Optimality residual accepted when the iteration stalls near a solution.
  double inaccurate_optimal_tol = 1e-6;
  bool verbose = false;
};

enum class SolveStatus { kOptimal, kPrimalInfeasible, kDualInfeasible, kNumericalLimit };
std::string to_string(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::kNumericalLimit;
  double primal_value = 0.0;  // c^T x + offset
  double dual_value = 0.0;    // -b^T y - h^T z + offset
  Eigen::VectorXd x, s;       // primal point
  Eigen::VectorXd y, z;       // dual point (A^T y + G^T z + c = 0, z in K)
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  bool inaccurate = false;  // status from a loose-tolerance certificate after a stall
};

SolveResult solve_program(const ConicProgram& p, const SolverOptions& opts = {});

struct CertificateReport {
  double primal_residual = 0.0;  // relative ||Ax-b||, ||Gx+s-h||
  double dual_residual = 0.0;    // relative ||A^T y + G^T z + c||
  double s_cone_violation = 0.0;
  double z_cone_violation = 0.0;
  double gap = 0.0;  // |primal - dual| / (1 + |primal|)
  bool primal_ok = false;
  bool dual_ok = false;
  bool gap_ok = false;
  bool passed() const { return primal_ok && dual_ok && gap_ok; }
};

CertificateReport verify_certificate(const ConicProgram& p, const SolveResult& r,
                                     double tol = 1e-8);

// Largest alpha such that u + alpha * du stays in the closed cone (infinity if unbounded).
double max_step(const std::vector<Cone>& cones, const Eigen::VectorXd& u,
                const Eigen::VectorXd& du);
// Most negative "eigenvalue" of u over all blocks (0 when u is in the cone interior boundary).
double cone_violation(const std::vector<Cone>& cones, const Eigen::VectorXd& u);

Eigen::MatrixXd svec_to_matrix(int m, const Eigen::Ref<const Eigen::VectorXd>& v);
Eigen::VectorXd matrix_to_svec(const Eigen::MatrixXd& M);

// Sparse SDPA text format. Second-order blocks are written as arrow matrices and
// equalities as pairs of diagonal inequalities, so the file reads back as an
// equivalent program with PSD and diagonal blocks only.
void write_sdpa(const ConicProgram& p, std::ostream& os);
ConicProgram read_sdpa(std::istream& is);

}  // namespace cpop
