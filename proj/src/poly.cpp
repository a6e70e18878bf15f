#include "cpop/poly.hpp"

#include <algorithm>
#include <cmath>

namespace cpop {

int degree(const Exponent& a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

bool graded_less(const Exponent& a, const Exponent& b) {
  int da = degree(a), db = degree(b);
  if (da != db) return da < db;
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

ExponentPair::ExponentPair(Exponent a, Exponent b) : alpha(std::move(a)), beta(std::move(b)) {
  if (alpha.size() != beta.size())
    throw StructuralError("exponent pair: alpha and beta lengths differ");
  for (size_t i = 0; i < alpha.size(); ++i)
    if (alpha[i] < 0 || beta[i] < 0) throw StructuralError("exponent pair: negative exponent");
}

bool ExponentPairLess::operator()(const ExponentPair& a, const ExponentPair& b) const {
  int da = degree(a.alpha) + degree(a.beta);
  int db = degree(b.alpha) + degree(b.beta);
  if (da != db) return da < db;
  if (a.alpha != b.alpha) return graded_less(a.alpha, b.alpha);
  if (a.beta != b.beta) return graded_less(a.beta, b.beta);
  return false;
}

Exponent unit_exponent(int n, int k) {
  Exponent e(n, 0);
  e.at(k) = 1;
  return e;
}

Exponent add_exponents(const Exponent& a, const Exponent& b) {
  if (a.size() != b.size()) throw StructuralError("exponent lengths differ");
  Exponent r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

ComplexPolynomial::ComplexPolynomial(int n,
                                     const std::vector<std::pair<ExponentPair, Complex>>& terms,
                                     bool declare_real_valued)
    : n_(n) {
  for (const auto& [e, c] : terms) add_term(e, c);
  if (declare_real_valued) {
    if (!validate_real_valued(*this))
      throw StructuralError("polynomial declared real-valued but conj(f_ab) != f_ba");
    real_valued_ = true;
  }
}

void ComplexPolynomial::check_pair(const ExponentPair& e) const {
  if (e.size() != n_ || static_cast<int>(e.beta.size()) != n_)
    throw StructuralError("exponent pair length does not match number of variables");
}

void ComplexPolynomial::add_term(const ExponentPair& e, Complex c) {
  check_pair(e);
  auto it = terms_.find(e);
  if (it == terms_.end()) {
    if (std::abs(c) >= kZeroThreshold) terms_.emplace(e, c);
    return;
  }
  it->second += c;
  if (std::abs(it->second) < kZeroThreshold) terms_.erase(it);
}

Complex ComplexPolynomial::coefficient(const ExponentPair& e) const {
  auto it = terms_.find(e);
  return it == terms_.end() ? Complex(0.0) : it->second;
}

Complex ComplexPolynomial::constant_term() const {
  return coefficient(ExponentPair(Exponent(n_, 0), Exponent(n_, 0)));
}

ComplexPolynomial ComplexPolynomial::constant(int n, Complex c) {
  ComplexPolynomial p(n);
  p.add_term(ExponentPair(Exponent(n, 0), Exponent(n, 0)), c);
  return p;
}

ComplexPolynomial ComplexPolynomial::variable(int n, int k) {
  ComplexPolynomial p(n);
  p.add_term(ExponentPair(Exponent(n, 0), unit_exponent(n, k)), 1.0);
  return p;
}

ComplexPolynomial ComplexPolynomial::conj_variable(int n, int k) {
  ComplexPolynomial p(n);
  p.add_term(ExponentPair(unit_exponent(n, k), Exponent(n, 0)), 1.0);
  return p;
}

ComplexPolynomial ComplexPolynomial::abs2(int n, int k) {
  ComplexPolynomial p(n);
  p.add_term(ExponentPair(unit_exponent(n, k), unit_exponent(n, k)), 1.0);
  return p;
}

ComplexPolynomial ComplexPolynomial::hermitian_form(const Eigen::MatrixXcd& H) {
  if (H.rows() != H.cols()) throw StructuralError("hermitian_form: matrix not square");
  const int n = static_cast<int>(H.rows());
  ComplexPolynomial p(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (H(i, j) != Complex(0.0))
        p.add_term(ExponentPair(unit_exponent(n, i), unit_exponent(n, j)), H(i, j));
  return p;
}

Complex ComplexPolynomial::evaluate(const Eigen::VectorXcd& z) const {
  if (z.size() != n_) throw StructuralError("evaluate: dimension mismatch");
  int maxdeg = 0;
  for (const auto& [e, c] : terms_)
    for (int i = 0; i < n_; ++i) maxdeg = std::max({maxdeg, e.alpha[i], e.beta[i]});
  // powers[i][p] = z_i^p
  std::vector<std::vector<Complex>> pw(n_, std::vector<Complex>(maxdeg + 1, 1.0));
  for (int i = 0; i < n_; ++i)
    for (int p = 1; p <= maxdeg; ++p) pw[i][p] = pw[i][p - 1] * z(i);
  Complex sum = 0.0;
  for (const auto& [e, c] : terms_) {
    Complex m = c;
    for (int i = 0; i < n_; ++i) {
      if (e.alpha[i]) m *= std::conj(pw[i][e.alpha[i]]);
      if (e.beta[i]) m *= pw[i][e.beta[i]];
    }
    sum += m;
  }
  return sum;
}

ComplexPolynomial ComplexPolynomial::conjugate() const {
  ComplexPolynomial r(n_);
  for (const auto& [e, c] : terms_) r.terms_.emplace(e.mirrored(), std::conj(c));
  r.real_valued_ = real_valued_;
  return r;
}

ComplexPolynomial ComplexPolynomial::relabel(int new_n, const std::vector<int>& var_map) const {
  if (static_cast<int>(var_map.size()) != n_) throw StructuralError("relabel: map size mismatch");
  ComplexPolynomial r(new_n);
  for (const auto& [e, c] : terms_) {
    Exponent a(new_n, 0), b(new_n, 0);
    for (int i = 0; i < n_; ++i) {
      if (var_map[i] < 0 || var_map[i] >= new_n) throw StructuralError("relabel: bad index");
      a[var_map[i]] += e.alpha[i];
      b[var_map[i]] += e.beta[i];
    }
    r.add_term(ExponentPair(a, b), c);
  }
  r.real_valued_ = real_valued_;
  return r;
}

ComplexPolynomial ComplexPolynomial::scale_vars(const Eigen::VectorXd& scale) const {
  if (scale.size() != n_) throw StructuralError("scale_vars: dimension mismatch");
  ComplexPolynomial r(n_);
  for (const auto& [e, c] : terms_) {
    double f = 1.0;
    for (int i = 0; i < n_; ++i) f *= std::pow(scale(i), e.alpha[i] + e.beta[i]);
    r.add_term(e, c * f);
  }
  r.real_valued_ = real_valued_;
  return r;
}

ComplexPolynomial& ComplexPolynomial::operator+=(const ComplexPolynomial& o) {
  if (o.n_ != n_) throw StructuralError("polynomial sum: variable count mismatch");
  for (const auto& [e, c] : o.terms_) add_term(e, c);
  real_valued_ = real_valued_ && o.real_valued_;
  return *this;
}

ComplexPolynomial& ComplexPolynomial::operator-=(const ComplexPolynomial& o) {
  if (o.n_ != n_) throw StructuralError("polynomial difference: variable count mismatch");
  for (const auto& [e, c] : o.terms_) add_term(e, -c);
  real_valued_ = real_valued_ && o.real_valued_;
  return *this;
}

ComplexPolynomial& ComplexPolynomial::operator*=(Complex c) {
  if (std::abs(c) == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= c;
    if (std::abs(it->second) < kZeroThreshold)
      it = terms_.erase(it);
    else
      ++it;
  }
  if (c.imag() != 0.0) real_valued_ = false;
  return *this;
}

ComplexPolynomial operator*(const ComplexPolynomial& a, const ComplexPolynomial& b) {
  if (a.n_ != b.n_) throw StructuralError("polynomial product: variable count mismatch");
  ComplexPolynomial r(a.n_);
  for (const auto& [ea, ca] : a.terms_)
    for (const auto& [eb, cb] : b.terms_)
      r.add_term(ExponentPair(add_exponents(ea.alpha, eb.alpha), add_exponents(ea.beta, eb.beta)),
                 ca * cb);
  return r;
}

bool validate_real_valued(const ComplexPolynomial& p) {
  for (const auto& [e, c] : p.terms()) {
    auto it = p.terms().find(e.mirrored());
    if (it == p.terms().end()) return false;
    if (std::conj(c) != it->second) return false;
  }
  return true;
}

DegreeInfo degree_info(const ComplexPolynomial& p) {
  if (p.is_zero()) throw StructuralError("degree_info: zero polynomial");
  DegreeInfo info;
  std::set<int> vars;
  for (const auto& [e, c] : p.terms()) {
    info.k = std::max({info.k, degree(e.alpha), degree(e.beta)});
    for (int i = 0; i < e.size(); ++i)
      if (e.alpha[i] + e.beta[i] > 0) vars.insert(i);
  }
  info.support_vars.assign(vars.begin(), vars.end());
  return info;
}

Eigen::VectorXcd wirtinger_gradient(const ComplexPolynomial& p, const Eigen::VectorXcd& z) {
  if (!validate_real_valued(p)) throw StructuralError("wirtinger_gradient: polynomial not real-valued");
  const int n = p.num_vars();
  if (z.size() != n) throw StructuralError("wirtinger_gradient: dimension mismatch");
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(n);
  for (int k = 0; k < n; ++k) {
    ComplexPolynomial dk(n);
    for (const auto& [e, c] : p.terms()) {
      if (e.beta[k] == 0) continue;
      Exponent b = e.beta;
      b[k] -= 1;
      dk.add_term(ExponentPair(e.alpha, b), c * static_cast<double>(e.beta[k]));
    }
    g(k) = dk.evaluate(z);
  }
  return g;
}

bool is_torus_invariant(const ComplexPolynomial& p) {
  for (const auto& [e, c] : p.terms())
    if (degree(e.alpha) != degree(e.beta)) return false;
  return true;
}

bool is_sign_invariant(const ComplexPolynomial& p) {
  for (const auto& [e, c] : p.terms())
    if ((degree(e.alpha) + degree(e.beta)) % 2 != 0) return false;
  return true;
}

}  // namespace cpop
