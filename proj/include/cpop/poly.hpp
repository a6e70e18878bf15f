#pragma once

#include <complex>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cpop {

using Complex = std::complex<double>;
using Exponent = std::vector<int>;

// Raised for malformed inputs: mismatched lengths, wrong orders, bad indices.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

int degree(const Exponent& a);

// Graded order on exponents: total degree first, then reverse lexicographic so
// that z1 precedes z2 inside a degree.
bool graded_less(const Exponent& a, const Exponent& b);

// Index pair of the monomial conj(z)^alpha z^beta.
struct ExponentPair {
  Exponent alpha;
  Exponent beta;

  ExponentPair() = default;
  ExponentPair(Exponent a, Exponent b);

  int size() const { return static_cast<int>(alpha.size()); }
  ExponentPair mirrored() const { return ExponentPair(beta, alpha); }
  bool operator==(const ExponentPair& o) const = default;
};

// (|alpha|+|beta|, alpha, beta) with graded_less on each component.
struct ExponentPairLess {
  bool operator()(const ExponentPair& a, const ExponentPair& b) const;
};

struct DegreeInfo {
  int k = 0;
  std::vector<int> support_vars;  // 0-based, sorted
};

class ComplexPolynomial {
 public:
  using TermMap = std::map<ExponentPair, Complex, ExponentPairLess>;
  static constexpr double kZeroThreshold = 1e-14;

  explicit ComplexPolynomial(int n = 0) : n_(n) {}
  // Declaring real_valued validates conj(f_ab) = f_ba immediately.
  ComplexPolynomial(int n, const std::vector<std::pair<ExponentPair, Complex>>& terms,
                    bool declare_real_valued = false);

  static ComplexPolynomial constant(int n, Complex c);
  static ComplexPolynomial variable(int n, int k);
  static ComplexPolynomial conj_variable(int n, int k);
  static ComplexPolynomial abs2(int n, int k);
  // z^H H z for a square complex matrix H.
  static ComplexPolynomial hermitian_form(const Eigen::MatrixXcd& H);

  int num_vars() const { return n_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool declared_real() const { return real_valued_; }

  void add_term(const ExponentPair& e, Complex c);
  Complex coefficient(const ExponentPair& e) const;
  Complex constant_term() const;

  Complex evaluate(const Eigen::VectorXcd& z) const;
  ComplexPolynomial conjugate() const;
  // Re-index variables: variable k becomes var_map[k] in a space of new_n.
  ComplexPolynomial relabel(int new_n, const std::vector<int>& var_map) const;
  // Substitute z_k -> scale_k z_k.
  ComplexPolynomial scale_vars(const Eigen::VectorXd& scale) const;

  ComplexPolynomial& operator+=(const ComplexPolynomial& o);
  ComplexPolynomial& operator-=(const ComplexPolynomial& o);
  ComplexPolynomial& operator*=(Complex c);

  friend ComplexPolynomial operator+(ComplexPolynomial a, const ComplexPolynomial& b) {
    return a += b;
  }
  friend ComplexPolynomial operator-(ComplexPolynomial a, const ComplexPolynomial& b) {
    return a -= b;
  }
  friend ComplexPolynomial operator*(ComplexPolynomial a, Complex c) { return a *= c; }
  friend ComplexPolynomial operator*(Complex c, ComplexPolynomial a) { return a *= c; }
  friend ComplexPolynomial operator*(const ComplexPolynomial& a, const ComplexPolynomial& b);
  ComplexPolynomial operator-() const { return *this * Complex(-1.0); }

 private:
  void check_pair(const ExponentPair& e) const;

  int n_;
  TermMap terms_;
  bool real_valued_ = false;
};

bool validate_real_valued(const ComplexPolynomial& p);
DegreeInfo degree_info(const ComplexPolynomial& p);
// Wirtinger derivative d/dz of a real-valued polynomial.
Eigen::VectorXcd wirtinger_gradient(const ComplexPolynomial& p, const Eigen::VectorXcd& z);

// Invariance under z -> e^{i theta} z (only |alpha| = |beta| terms).
bool is_torus_invariant(const ComplexPolynomial& p);
// Invariance under z -> -z (only even |alpha|+|beta|).
bool is_sign_invariant(const ComplexPolynomial& p);

Exponent unit_exponent(int n, int k);
Exponent add_exponents(const Exponent& a, const Exponent& b);

}  // namespace cpop
