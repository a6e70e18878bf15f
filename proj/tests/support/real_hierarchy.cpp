#include "support/real_hierarchy.hpp"

#include <cmath>
#include <complex>
#include <functional>

namespace cpop::testing {

namespace {

using CPoly = std::map<std::vector<int>, std::complex<double>>;

CPoly multiply(const CPoly& a, const CPoly& b) {
  CPoly r;
  for (const auto& [ea, ca] : a)
    for (const auto& [eb, cb] : b) {
      std::vector<int> e(ea.size());
      for (size_t k = 0; k < e.size(); ++k) e[k] = ea[k] + eb[k];
      r[e] += ca * cb;
    }
  return r;
}

RealPoly real_part(const CPoly& p) {
  RealPoly r;
  for (const auto& [e, c] : p)
    if (std::abs(c.real()) > 1e-15) r[e] += c.real();
  return r;
}

std::vector<std::vector<int>> monomials(int N, int d) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(N, 0);
  std::function<void(int, int)> rec = [&](int k, int left) {
    if (k == N) {
      out.push_back(e);
      return;
    }
    for (int p = 0; p <= left; ++p) {
      e[k] = p;
      rec(k + 1, left - p);
    }
    e[k] = 0;
  };
  rec(0, d);
  return out;
}

}  // namespace

RealPoly realify(const ComplexPolynomial& p) {
  const int n = p.num_vars();
  CPoly total;
  for (const auto& [e, c] : p.terms()) {
    CPoly term{{std::vector<int>(2 * n, 0), c}};
    for (int k = 0; k < n; ++k) {
      std::vector<int> ex(2 * n, 0), ey(2 * n, 0);
      ex[k] = 1;
      ey[n + k] = 1;
      const CPoly z{{ex, 1.0}, {ey, std::complex<double>(0, 1)}};
      const CPoly zc{{ex, 1.0}, {ey, std::complex<double>(0, -1)}};
      for (int t = 0; t < e.alpha[k]; ++t) term = multiply(term, zc);
      for (int t = 0; t < e.beta[k]; ++t) term = multiply(term, z);
    }
    for (const auto& [m, v] : term) total[m] += v;
  }
  return real_part(total);
}

RealPoly restrict_to_reals(const ComplexPolynomial& p) {
  CPoly total;
  for (const auto& [e, c] : p.terms()) {
    std::vector<int> m(p.num_vars());
    for (int k = 0; k < p.num_vars(); ++k) m[k] = e.alpha[k] + e.beta[k];
    total[m] += c;
  }
  return real_part(total);
}

namespace {

template <class F>
RealPop convert(const ComplexPop& p, int nvars, F f) {
  RealPop r;
  r.n = nvars;
  r.f = f(p.objective);
  for (const auto& c : p.constraints) r.g.emplace_back(f(c.g), c.equality);
  return r;
}

}  // namespace

RealPop realify(const ComplexPop& p) {
  return convert(p, 2 * p.n, [](const ComplexPolynomial& q) { return realify(q); });
}

RealPop restrict_to_reals(const ComplexPop& p) {
  return convert(p, p.n, [](const ComplexPolynomial& q) { return restrict_to_reals(q); });
}

double evaluate(const RealPoly& p, const std::vector<double>& x) {
  double s = 0.0;
  for (const auto& [e, c] : p) {
    double t = c;
    for (size_t k = 0; k < e.size(); ++k) t *= std::pow(x[k], e[k]);
    s += t;
  }
  return s;
}

int real_degree(const RealPoly& p) {
  int d = 0;
  for (const auto& [e, c] : p) {
    int s = 0;
    for (int v : e) s += v;
    d = std::max(d, s);
  }
  return d;
}

RealBound real_moment_bound(const RealPop& p, int d) {
  const int N = p.n;
  ConicBuilder cb;
  std::map<std::vector<int>, int> var;
  auto y = [&](const std::vector<int>& e) {
    AffineExpr a;
    bool zero = true;
    for (int v : e) zero &= v == 0;
    if (zero) {
      a.constant = 1.0;
      return a;
    }
    auto it = var.find(e);
    if (it == var.end()) it = var.emplace(e, cb.add_variable()).first;
    a.add(it->second, 1.0);
    return a;
  };
  auto sum = [](const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> s(a.size());
    for (size_t k = 0; k < a.size(); ++k) s[k] = a[k] + b[k];
    return s;
  };
  auto riesz = [&](const RealPoly& g, const std::vector<int>& shift) {
    AffineExpr a;
    for (const auto& [e, c] : g) {
      AffineExpr t = y(sum(e, shift));
      t *= c;
      a += t;
    }
    return a;
  };
  {
    AffineExpr obj = riesz(p.f, std::vector<int>(N, 0));
    for (const auto& [v, c] : obj.terms) cb.add_cost(v, c);
    cb.add_offset(obj.constant);
  }
  auto localizing = [&](const RealPoly& g, int order, bool equality) {
    const auto basis = monomials(N, order);
    const int m = static_cast<int>(basis.size());
    std::vector<AffineExpr> lower;
    for (int j = 0; j < m; ++j)
      for (int i = j; i < m; ++i) {
        AffineExpr e = riesz(g, sum(basis[i], basis[j]));
        if (equality)
          cb.add_equality(e);
        else
          lower.push_back(e);
      }
    if (!equality) {
      if (m == 1)
        cb.add_nonnegative(lower[0]);
      else
        cb.add_psd(m, lower);
    }
  };
  RealPoly one{{std::vector<int>(N, 0), 1.0}};
  localizing(one, d, false);
  for (const auto& [g, eq] : p.g) {
    const int order = d - (real_degree(g) + 1) / 2;
    if (order < 0) throw StructuralError("real relaxation order too small");
    localizing(g, order, eq);
  }
  SolveResult r = solve_program(cb.build());
  return {r.status, r.primal_value};
}

}  // namespace cpop::testing
