#pragma once

#include <random>

#include <Eigen/Dense>

#include "cpop/poly.hpp"

namespace cpop::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Complex random_complex(Rng& rng) { return {uniform(rng), uniform(rng)}; }

inline Eigen::VectorXcd random_cvector(Rng& rng, int n, double scale = 1.0) {
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * random_complex(rng);
  return v;
}

inline Eigen::MatrixXcd random_hermitian(Rng& rng, int n) {
  Eigen::MatrixXcd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = random_complex(rng);
  return (M + M.adjoint()) / 2.0;
}

inline Eigen::MatrixXcd random_psd(Rng& rng, int n, int rank) {
  Eigen::MatrixXcd F(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) F(i, j) = random_complex(rng);
  return F * F.adjoint();
}

inline Exponent random_exponent(Rng& rng, int n, int deg) {
  Exponent e(n, 0);
  for (int d = 0; d < deg; ++d) e[uniform_int(rng, 0, n - 1)] += 1;
  return e;
}

// Random polynomial with independent coefficients (not real-valued in general).
inline ComplexPolynomial random_poly(Rng& rng, int n, int max_half_degree, int terms) {
  ComplexPolynomial p(n);
  for (int t = 0; t < terms; ++t) {
    Exponent a = random_exponent(rng, n, uniform_int(rng, 0, max_half_degree));
    Exponent b = random_exponent(rng, n, uniform_int(rng, 0, max_half_degree));
    p.add_term(ExponentPair(a, b), random_complex(rng));
  }
  return p;
}

// Random real-valued polynomial: every term comes with its conjugate mirror.
inline ComplexPolynomial random_real_poly(Rng& rng, int n, int max_half_degree, int terms,
                                          bool torus = false) {
  ComplexPolynomial p(n);
  for (int t = 0; t < terms; ++t) {
    const int da = uniform_int(rng, 0, max_half_degree);
    const int db = torus ? da : uniform_int(rng, 0, max_half_degree);
    Exponent a = random_exponent(rng, n, da);
    Exponent b = random_exponent(rng, n, db);
    Complex c = random_complex(rng);
    if (a == b) c = c.real();
    p.add_term(ExponentPair(a, b), c);
    if (a != b) p.add_term(ExponentPair(b, a), std::conj(c));
  }
  return p;
}

}  // namespace cpop::testing
