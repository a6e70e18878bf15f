#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cpop/chordal.hpp"
#include "cpop/conic.hpp"
#include "cpop/poly.hpp"
#include "cpop/pop.hpp"

namespace cpop {

enum class Invariance { kNone, kTorus, kSignFlip };
std::string to_string(Invariance inv);
Invariance invariance_from_string(const std::string& s);

// Exponents alpha with |alpha| <= d supported on vars, graded order. Under an invariance the
// moment matrix is block diagonal; groups lists the basis positions of each block.
struct MonomialBasis {
  int n = 0;
  std::vector<int> vars;
  int d = 0;
  Invariance invariance = Invariance::kNone;
  std::vector<Exponent> exponents;
  std::vector<std::vector<int>> groups;

  int size() const { return static_cast<int>(exponents.size()); }
};

MonomialBasis monomial_basis(int n, const std::vector<int>& vars, int d,
                             Invariance inv = Invariance::kNone);
MonomialBasis monomial_basis(int n, int d, Invariance inv = Invariance::kNone);

// Truncated moment sequence y_{alpha,beta}; y_{beta,alpha} = conj(y_{alpha,beta}) is implied.
class MomentSequence {
 public:
  MomentSequence() = default;
  explicit MomentSequence(int n) : n_(n) {}

  int num_vars() const { return n_; }
  // Largest max(|alpha|, |beta|) stored.
  int degree() const;
  void set(const ExponentPair& e, Complex v);
  bool has(const ExponentPair& e) const;
  // Throws StructuralError when the moment is not stored.
  Complex get(const ExponentPair& e) const;
  Complex get(const Exponent& a, const Exponent& b) const { return get(ExponentPair(a, b)); }
  const std::map<ExponentPair, Complex, ExponentPairLess>& values() const { return values_; }
  MomentSequence scaled(double factor) const;

 private:
  int n_ = 0;
  std::map<ExponentPair, Complex, ExponentPairLess> values_;  // canonical orientation only
};

// L_y(f) = sum f_{alpha,beta} y_{alpha,beta}.
Complex riesz_eval(const MomentSequence& y, const ComplexPolynomial& f);
// M(g y)(a, b) = L_y(g conj(z^alpha_a) z^alpha_b) over the given basis.
Eigen::MatrixXcd localizing_matrix(const MomentSequence& y, const ComplexPolynomial& g,
                                   const MonomialBasis& basis);
Eigen::MatrixXcd localizing_matrix(const MomentSequence& y, const ComplexPolynomial& g, int d);
Eigen::MatrixXcd moment_matrix(const MomentSequence& y, int d);

// Adds z_{n+1} and |z_1|^2 + ... + |z_{n+1}|^2 = R^2; with_bijection also adds
// i z_{n+1} - i conj(z_{n+1}) = 0 and z_{n+1} + conj(z_{n+1}) >= 0.
ComplexPop add_sphere_slack(const ComplexPop& p, double R, bool with_bijection);
// One slack per clique with sum over the clique of |z_k|^2 + |s_l|^2 = R_l^2. The
// decomposition is extended so that clique l holds its slack variable.
ComplexPop add_clique_sphere_slacks(const ComplexPop& p, CliqueDecomposition& dec,
                                    const std::vector<double>& radii);

struct TraceBoundReport {
  double trace = 0.0;
  double bound = 0.0;
  double slack = 0.0;  // bound - trace
  bool passed = false;
};
// Tr M_d(y) <= y_00 sum_{l=0}^d R^{2l}.
TraceBoundReport trace_bound_check(const MomentSequence& y, double R, int d, double tol = 1e-6);

struct RelaxationOptions {
  // Uniform order used when orders is empty; also a floor for the clique orders.
  int order = 0;
  std::vector<int> orders;  // per-constraint d_i
  // Dense relaxation when absent.
  std::optional<CliqueDecomposition> decomposition;
  Invariance invariance = Invariance::kNone;
  // y_{alpha,beta} depends on alpha + beta only (and is real).
  bool hankel = false;
  // Work in w = z / R when the problem declares a ball radius R != 1.
  bool scale_to_sphere = true;
  // |Re y|, |Im y| <= prod bound^(alpha+beta) when per-variable modulus bounds are known.
  std::optional<Eigen::VectorXd> variable_bounds;
};

// Role of one group of constraints in the conic program.
struct RelaxationBlock {
  enum class Kind { kMoment, kLocalizing, kLocalizingEquality, kNormCone, kEpigraphCone, kBox };
  Kind kind = Kind::kMoment;
  int clique = -1;
  int constraint = -1;
  std::vector<Exponent> basis;  // Hermitian block basis (moment or localizing)
  // First cone row of s (or first equality row for kLocalizingEquality).
  int first_row = -1;
  bool scalar = false;  // order-one block entered as a nonnegative row
  // Equality rows: (a, b, imaginary part) for each row from first_row on.
  std::vector<std::tuple<int, int, bool>> rows;
};

// Realified moment coordinates: y_{alpha,beta} = constant + x[re] + i sign x[im].
struct MomentRef {
  int re = -1;
  int im = -1;
  double im_sign = 1.0;
  double constant = 0.0;
};

struct MomentRelaxation {
  ConicProgram program;
  int n = 0;
  double scale = 1.0;  // internal variables are z / scale
  Invariance invariance = Invariance::kNone;
  bool hankel = false;
  CliqueDecomposition decomposition;
  std::vector<int> orders;
  ComplexPop scaled_problem;  // the problem in internal variables
  std::map<ExponentPair, MomentRef, ExponentPairLess> refs;
  std::vector<RelaxationBlock> blocks;

  int max_order() const;
  // Moments in the original variables.
  MomentSequence moments(const Eigen::VectorXd& x) const;
  long psd_entries() const { return program.psd_size(); }
  nlohmann::json index_map() const;
};

// Throws StructuralError on orders below a half-degree or invariance not held by the data.
MomentRelaxation build_moment_relaxation(const ComplexPop& p, const RelaxationOptions& opts);

// Per-constraint orders and covers used by a relaxation; exposed for the adaptive driver.
CliqueDecomposition prepare_decomposition(const ComplexPop& p, const std::vector<int>& orders,
                                          bool sparse, int min_order);

// Multiplier of the sum-of-squares certificate f - lambda = sum sigma_i g_i.
struct SosMultiplier {
  int constraint = -1;  // -1 for sigma_0
  int clique = -1;
  bool free = false;  // equality multiplier (any real-valued polynomial)
  Eigen::MatrixXcd gram;
  ComplexPolynomial poly;  // in the original variables
};

struct SosCertificate {
  double lambda = 0.0;
  std::vector<SosMultiplier> multipliers;
  // Largest |coefficient| of f - lambda - sum sigma_i g_i (meaningful without reductions and
  // second-order extras).
  double identity_residual = 0.0;
};

// Certificate from the dual point (z, y) of the moment program.
SosCertificate sos_certificate(const MomentRelaxation& r, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& y, double lambda);

// Explicit SOS program: Gram matrices and equality multipliers as primal variables.
struct SosProgram {
  ConicProgram program;  // minimizes -lambda
  int cone_rows = 0;     // first cone_rows variables are the Gram entries
  int num_equalities = 0;
};
SosProgram build_sos_dual(const MomentRelaxation& r);
// lambda and the certificate from a solution of the SOS program.
SosCertificate sos_from_solution(const MomentRelaxation& r, const SosProgram& s, const Eigen::VectorXd& x);

}  // namespace cpop
