#pragma once

#include <map>
#include <utility>
#include <vector>

#include "cpop/conic.hpp"
#include "cpop/pop.hpp"

namespace cpop::testing {

// Real polynomial in N variables: exponent vector -> coefficient.
using RealPoly = std::map<std::vector<int>, double>;

struct RealPop {
  int n = 0;
  RealPoly f;
  std::vector<std::pair<RealPoly, bool>> g;  // (polynomial, is equality)
};

// z = x + i x' with 2n real variables (x_1..x_n, x'_1..x'_n).
RealPoly realify(const ComplexPolynomial& p);
RealPop realify(const ComplexPop& p);
// z = x with n real variables (the problem restricted to real points).
RealPoly restrict_to_reals(const ComplexPolynomial& p);
RealPop restrict_to_reals(const ComplexPop& p);

double evaluate(const RealPoly& p, const std::vector<double>& x);
int real_degree(const RealPoly& p);

struct RealBound {
  SolveStatus status = SolveStatus::kNumericalLimit;
  double value = 0.0;
};
// Lasserre relaxation of order d: moment matrix over monomials of degree <= d, localizing
// matrices of order d - ceil(deg g / 2).
RealBound real_moment_bound(const RealPop& p, int d);

}  // namespace cpop::testing
