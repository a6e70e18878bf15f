#include "cpop/shor.hpp"

#include <cmath>
#include <set>

#include "cpop/linalg.hpp"

namespace cpop {

namespace {

constexpr int kAbsent = -1;
constexpr int kFixedZero = -2;

double support_tol(const Eigen::MatrixXcd& H) {
  return 1e-14 * std::max(1.0, H.cwiseAbs().maxCoeff());
}

// Quadratic polynomial -> (H, constant); throws if a term is not of the form conj(z_i) z_j or 1.
std::pair<Eigen::MatrixXcd, double> hermitian_form_of(const ComplexPolynomial& p) {
  const int n = p.num_vars();
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
  double c = 0.0;
  for (const auto& [e, coef] : p.terms()) {
    const int da = degree(e.alpha), db = degree(e.beta);
    if (da == 0 && db == 0) {
      c += coef.real();
      continue;
    }
    if (da != 1 || db != 1) throw StructuralError("polynomial is not a Hermitian quadratic form");
    int i = 0, j = 0;
    for (int k = 0; k < n; ++k) {
      if (e.alpha[k]) i = k;
      if (e.beta[k]) j = k;
    }
    H(i, j) += coef;
  }
  return {H, c};
}

void add_extras(ConicBuilder& cb, const QcqpC& q,
                const std::function<AffineExpr(const Eigen::MatrixXcd&)>& trace) {
  for (const auto& nc : q.norms) {
    std::vector<AffineExpr> soc;
    soc.emplace_back(nc.bound);
    for (const auto& [P, o] : nc.parts) {
      AffineExpr e = trace(P);
      e.constant += o;
      soc.push_back(e);
    }
    cb.add_second_order(soc);
  }
  for (const auto& ec : q.costs) {
    AffineExpr u = trace(ec.H);
    u.constant += ec.offset;
    if (ec.a == 0.0) {
      for (const auto& [v, coef] : u.terms) cb.add_cost(v, ec.b * coef);
      cb.add_offset(ec.b * u.constant + ec.c);
      continue;
    }
    // t >= a u^2 + b u + c  <=>  (r + 1, r - 1, 2u) in Q with r = (t - b u - c) / a
    const int t = cb.add_variable(1.0);
    AffineExpr r;
    r.add(t, 1.0 / ec.a);
    AffineExpr bu = u;
    bu *= -ec.b / ec.a;
    r += bu;
    r.constant -= ec.c / ec.a;
    AffineExpr r1 = r, r2 = r, u2 = u;
    r1.constant += 1.0;
    r2.constant -= 1.0;
    u2 *= 2.0;
    cb.add_second_order({r1, r2, u2});
  }
}

void add_constraint(ConicBuilder& cb, AffineExpr e, Sense sense, double rhs) {
  e.constant -= rhs;
  switch (sense) {
    case Sense::kGe: cb.add_nonnegative(e); break;
    case Sense::kLe:
      e *= -1.0;
      cb.add_nonnegative(e);
      break;
    case Sense::kEq: cb.add_equality(e); break;
  }
}

// Tr(H Z) on Hermitian entry variables.
AffineExpr complex_trace(const ShorRelaxation& r, const Eigen::MatrixXcd& Hin) {
  Eigen::MatrixXcd H = hermitian_part(Hin);
  const double tol = support_tol(H);
  AffineExpr e;
  for (int j = 0; j < r.n; ++j)
    for (int i = j; i < r.n; ++i) {
      const Complex h = H(i, j);
      if (std::abs(h) <= tol) continue;
      if (r.re_var(i, j) < 0) throw StructuralError("matrix support not covered by the relaxation");
      if (i == j) {
        e.add(r.re_var(i, i), h.real());
      } else {
        e.add(r.re_var(i, j), 2.0 * h.real());
        e.add(r.im_var(i, j), 2.0 * h.imag());
      }
    }
  return e;
}

// Tr(Lambda(H) X) on real entry variables.
AffineExpr real_trace(const ShorRelaxation& r, const Eigen::MatrixXcd& Hin) {
  Eigen::MatrixXd M = ring_embed(hermitian_part(Hin));
  const double tol = support_tol(Hin);
  AffineExpr e;
  for (int j = 0; j < 2 * r.n; ++j)
    for (int i = j; i < 2 * r.n; ++i) {
      const double m = M(i, j);
      if (std::abs(m) <= tol) continue;
      const int v = r.x_var(i, j);
      if (v == kFixedZero) continue;
      if (v < 0) throw StructuralError("matrix support not covered by the relaxation");
      e.add(v, i == j ? m : 2.0 * m);
    }
  return e;
}

void add_objective_and_constraints(ConicBuilder& cb, const QcqpC& q,
                                   const std::function<AffineExpr(const Eigen::MatrixXcd&)>& trace) {
  AffineExpr obj = trace(q.H0);
  for (const auto& [v, coef] : obj.terms) cb.add_cost(v, coef);
  cb.add_offset(q.offset);
  for (const auto& c : q.constraints) add_constraint(cb, trace(c.H), c.sense, c.rhs);
  add_extras(cb, q, trace);
}

ShorRelaxation build_real_sdp(const QcqpC& q, bool zero_diag, bool coupled) {
  q.validate();
  ShorRelaxation r;
  r.form = coupled ? RelaxForm::kRealCoupled : RelaxForm::kReal;
  r.n = q.n;
  r.zero_diag = zero_diag;
  const int N = 2 * q.n;
  r.x_var = Eigen::MatrixXi::Constant(N, N, kAbsent);
  ConicBuilder cb;
  const int first = zero_diag ? 1 : 0;
  for (int j = 0; j < N; ++j)
    for (int i = j; i < N; ++i) {
      if (zero_diag && j == 0)
        r.x_var(i, j) = kFixedZero;
      else
        r.x_var(i, j) = cb.add_variable();
    }
  auto var = [&](int i, int j) { return i >= j ? r.x_var(i, j) : r.x_var(j, i); };
  auto trace = [&](const Eigen::MatrixXcd& H) { return real_trace(r, H); };
  add_objective_and_constraints(cb, q, trace);
  const int m = N - first;
  std::vector<AffineExpr> lower;
  for (int j = first; j < N; ++j)
    for (int i = j; i < N; ++i) {
      AffineExpr e;
      e.add(var(i, j), 1.0);
      lower.push_back(e);
    }
  cb.add_psd(m, lower);
  if (coupled) {
    const int n = q.n;
    auto tie = [&](int a, int b, double sign) {
      // X_a = sign * X_b, with fixed zeros folded in
      AffineExpr e;
      if (a >= 0) e.add(a, 1.0);
      if (b >= 0) e.add(b, -sign);
      if (!e.terms.empty()) cb.add_equality(e);
    };
    for (int j = 0; j < n; ++j)
      for (int i = j; i < n; ++i) tie(var(i, j), var(n + i, n + j), 1.0);  // A = C
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        if (i == j)
          tie(var(n + i, i), -1, 1.0);  // B_ii = 0
        else
          tie(var(n + j, i), var(n + i, j), -1.0);  // B_ji = -B_ij
      }
  }
  r.program = cb.build();
  return r;
}

}  // namespace

void QcqpC::validate() const {
  auto check = [&](const Eigen::MatrixXcd& H, const char* what) {
    if (H.rows() != n || H.cols() != n) throw StructuralError(std::string(what) + ": wrong dimension");
    if (!is_hermitian(H, 1e-10)) throw StructuralError(std::string(what) + ": not Hermitian");
  };
  if (n <= 0) throw StructuralError("QCQP needs at least one variable");
  check(H0, "objective");
  for (const auto& c : constraints) {
    check(c.H, "constraint");
    if (!std::isfinite(c.rhs)) throw StructuralError("constraint right-hand side not finite");
  }
  for (const auto& nc : norms)
    for (const auto& part : nc.parts) check(part.first, "norm constraint");
  for (const auto& ec : costs) check(ec.H, "epigraph cost");
}

double QcqpC::objective(const Eigen::VectorXcd& z) const {
  double v = z.dot(H0 * z).real() + offset;
  for (const auto& ec : costs) {
    const double u = z.dot(ec.H * z).real() + ec.offset;
    v += ec.a * u * u + ec.b * u + ec.c;
  }
  return v;
}

double QcqpC::max_violation(const Eigen::VectorXcd& z) const {
  double worst = 0.0;
  for (const auto& c : constraints) {
    const double v = z.dot(c.H * z).real() - c.rhs;
    worst = std::max(worst, c.sense == Sense::kLe ? v : c.sense == Sense::kGe ? -v : std::abs(v));
  }
  for (const auto& nc : norms) {
    double s = 0.0;
    for (const auto& [P, o] : nc.parts) s += std::norm(z.dot(P * z).real() + o);
    worst = std::max(worst, std::sqrt(s) - nc.bound);
  }
  return worst;
}

QcqpC qcqp_from_pop(const ComplexPop& pop) {
  pop.validate();
  QcqpC q;
  q.n = pop.n;
  auto [H0, c0] = hermitian_form_of(pop.objective);
  q.H0 = H0;
  q.offset = c0;
  for (const auto& c : pop.constraints) {
    auto [H, k] = hermitian_form_of(c.g);
    q.constraints.push_back({H, c.equality ? Sense::kEq : Sense::kGe, -k});
  }
  for (const auto& nc : pop.norm_constraints) {
    QuadNormConstraint qn;
    qn.bound = nc.bound;
    for (const auto& p : nc.parts) qn.parts.push_back(hermitian_form_of(p));
    q.norms.push_back(qn);
  }
  for (const auto& qc : pop.quadratic_costs) {
    auto [H, k] = hermitian_form_of(qc.p);
    q.costs.push_back({H, k, qc.a, qc.b, qc.c});
  }
  return q;
}

std::vector<std::pair<int, int>> problem_graph(const QcqpC& q) {
  std::set<std::pair<int, int>> edges;
  auto scan = [&](const Eigen::MatrixXcd& H) {
    const double tol = support_tol(H);
    for (int i = 0; i < q.n; ++i)
      for (int j = i + 1; j < q.n; ++j)
        if (std::abs(H(i, j)) > tol || std::abs(H(j, i)) > tol) edges.insert({i, j});
  };
  scan(q.H0);
  for (const auto& c : q.constraints) scan(c.H);
  for (const auto& nc : q.norms)
    for (const auto& part : nc.parts) scan(part.first);
  for (const auto& ec : q.costs) scan(ec.H);
  return {edges.begin(), edges.end()};
}

Eigen::MatrixXcd ShorRelaxation::complex_matrix(const Eigen::VectorXd& x) const {
  // Real forms: Z = (A + C) + i (B - B^T), so that Tr(H Z) = Tr(Lambda(H) X).
  if (re_var.size() == 0) return 2.0 * lambda_reduce(real_matrix(x));
  Eigen::MatrixXcd Z = Eigen::MatrixXcd::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      if (re_var(i, j) < 0) continue;
      Complex v(x(re_var(i, j)), i == j ? 0.0 : x(im_var(i, j)));
      Z(i, j) = v;
      Z(j, i) = std::conj(v);
    }
  return Z;
}

Eigen::MatrixXd ShorRelaxation::real_matrix(const Eigen::VectorXd& x) const {
  if (x_var.size() == 0) return ring_embed(complex_matrix(x));
  const int N = 2 * n;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(N, N);
  for (int j = 0; j < N; ++j)
    for (int i = j; i < N; ++i)
      if (x_var(i, j) >= 0) X(i, j) = X(j, i) = x(x_var(i, j));
  return X;
}

ShorRelaxation build_sdp_c(const QcqpC& q, const std::vector<std::vector<int>>& cliques_in) {
  q.validate();
  ShorRelaxation r;
  r.form = RelaxForm::kComplex;
  r.n = q.n;
  std::vector<std::vector<int>> cliques = cliques_in;
  if (cliques.empty()) {
    cliques.emplace_back();
    for (int i = 0; i < q.n; ++i) cliques[0].push_back(i);
  }
  r.re_var = Eigen::MatrixXi::Constant(q.n, q.n, kAbsent);
  r.im_var = Eigen::MatrixXi::Constant(q.n, q.n, kAbsent);
  ConicBuilder cb;
  for (const auto& C : cliques)
    for (int a : C)
      for (int b : C) {
        if (a < 0 || a >= q.n || b < 0 || b >= q.n) throw StructuralError("clique index out of range");
        const int i = std::max(a, b), j = std::min(a, b);
        if (r.re_var(i, j) != kAbsent) continue;
        r.re_var(i, j) = cb.add_variable();
        if (i != j) r.im_var(i, j) = cb.add_variable();
      }
  for (int i = 0; i < q.n; ++i)
    if (r.re_var(i, i) < 0) throw StructuralError("cliques do not cover every variable");
  add_objective_and_constraints(cb, q, [&](const Eigen::MatrixXcd& H) { return complex_trace(r, H); });
  for (const auto& C : cliques) {
    const int m = static_cast<int>(C.size());
    cb.add_hermitian_psd(m, [&](int a, int b) {
      const int u = C[a], v = C[b];
      const int i = std::max(u, v), j = std::min(u, v);
      AffineExpr re, im;
      re.add(r.re_var(i, j), 1.0);
      if (i != j) im.add(r.im_var(i, j), u >= v ? 1.0 : -1.0);
      return std::make_pair(re, im);
    });
  }
  r.program = cb.build();
  return r;
}

ShorRelaxation build_sdp_r(const QcqpC& q, bool zero_diag) { return build_real_sdp(q, zero_diag, false); }

ShorRelaxation build_csdp_r(const QcqpC& q) { return build_real_sdp(q, false, true); }

ShorRelaxation build_socp(const QcqpC& q, RelaxForm form,
                          const std::optional<std::vector<std::pair<int, int>>>& edges_in) {
  q.validate();
  std::vector<std::pair<int, int>> edges = edges_in ? *edges_in : problem_graph(q);
  for (auto& [i, j] : edges) {
    if (i == j || i < 0 || j < 0 || i >= q.n || j >= q.n) throw StructuralError("bad edge");
    if (i > j) std::swap(i, j);
  }
  ShorRelaxation r;
  r.form = form;
  r.n = q.n;
  ConicBuilder cb;
  const int n = q.n;
  if (form == RelaxForm::kComplex) {
    r.re_var = Eigen::MatrixXi::Constant(n, n, kAbsent);
    r.im_var = Eigen::MatrixXi::Constant(n, n, kAbsent);
    for (int i = 0; i < n; ++i) r.re_var(i, i) = cb.add_variable();
    for (auto [i, j] : edges) {
      if (r.re_var(j, i) != kAbsent) continue;
      r.re_var(j, i) = cb.add_variable();
      r.im_var(j, i) = cb.add_variable();
    }
    add_objective_and_constraints(cb, q, [&](const Eigen::MatrixXcd& H) { return complex_trace(r, H); });
    for (int i = 0; i < n; ++i) {
      AffineExpr d;
      d.add(r.re_var(i, i), 1.0);
      cb.add_nonnegative(d);
    }
    for (auto [i, j] : edges) {
      // |Z_ij|^2 <= Z_ii Z_jj
      AffineExpr s, t, u, v;
      s.add(r.re_var(i, i), 1.0);
      s.add(r.re_var(j, j), 1.0);
      t.add(r.re_var(i, i), 1.0);
      t.add(r.re_var(j, j), -1.0);
      u.add(r.re_var(j, i), 2.0);
      v.add(r.im_var(j, i), 2.0);
      cb.add_second_order({s, t, u, v});
    }
  } else {
    const int N = 2 * n;
    r.x_var = Eigen::MatrixXi::Constant(N, N, kAbsent);
    auto make = [&](int a, int b) {
      const int i = std::max(a, b), j = std::min(a, b);
      if (r.x_var(i, j) == kAbsent) r.x_var(i, j) = cb.add_variable();
      return r.x_var(i, j);
    };
    for (int i = 0; i < N; ++i) make(i, i);
    for (auto [i, j] : edges) {
      make(i, j);
      make(n + i, n + j);
      make(i, n + j);
      make(n + i, j);
    }
    add_objective_and_constraints(cb, q, [&](const Eigen::MatrixXcd& H) { return real_trace(r, H); });
    auto xv = [&](int a, int b) { return r.x_var(std::max(a, b), std::min(a, b)); };
    if (form == RelaxForm::kReal) {
      for (int i = 0; i < N; ++i) {
        AffineExpr d;
        d.add(xv(i, i), 1.0);
        cb.add_nonnegative(d);
      }
      std::set<std::pair<int, int>> real_edges;
      for (auto [i, j] : edges)
        for (auto [a, b] : {std::pair{i, j}, {n + i, n + j}, {i, n + j}, {n + i, j}})
          real_edges.insert({std::min(a, b), std::max(a, b)});
      for (auto [a, b] : real_edges) {
        AffineExpr s, t, u;
        s.add(xv(a, a), 1.0);
        s.add(xv(b, b), 1.0);
        t.add(xv(a, a), 1.0);
        t.add(xv(b, b), -1.0);
        u.add(xv(a, b), 2.0);
        cb.add_second_order({s, t, u});
      }
    } else {
      for (int i = 0; i < n; ++i) {
        AffineExpr d;
        d.add(xv(i, i), 1.0);
        cb.add_nonnegative(d);
        AffineExpr tie;
        tie.add(xv(i, i), 1.0);
        tie.add(xv(n + i, n + i), -1.0);
        cb.add_equality(tie);
      }
      for (auto [i, j] : edges) {
        AffineExpr a_eq, b_eq;
        a_eq.add(xv(i, j), 1.0);
        a_eq.add(xv(n + i, n + j), -1.0);
        cb.add_equality(a_eq);
        b_eq.add(xv(n + j, i), 1.0);
        b_eq.add(xv(n + i, j), 1.0);
        cb.add_equality(b_eq);
        // X_ij^2 + X_{n+i,j}^2 <= X_ii X_jj
        AffineExpr s, t, u, v;
        s.add(xv(i, i), 1.0);
        s.add(xv(j, j), 1.0);
        t.add(xv(i, i), 1.0);
        t.add(xv(j, j), -1.0);
        u.add(xv(i, j), 2.0);
        v.add(xv(n + i, j), 2.0);
        cb.add_second_order({s, t, u, v});
      }
    }
  }
  r.program = cb.build();
  return r;
}

std::optional<Eigen::VectorXcd> recover_solution(const Eigen::MatrixXcd& Z, double tol_ratio) {
  HermitianEigen e = hermitian_eig(Z);
  const int rank = rank_info(e.values, tol_ratio).rank;
  if (rank == 0) return Eigen::VectorXcd::Zero(Z.rows());
  if (rank != 1) return std::nullopt;
  return nearest_rank1(Z).u;
}

std::optional<Eigen::VectorXcd> recover_solution(const Eigen::MatrixXd& X, double tol_ratio) {
  if (X.rows() % 2 != 0) return std::nullopt;
  const int n = static_cast<int>(X.rows() / 2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((X + X.transpose()) / 2);
  Eigen::VectorXd ev = es.eigenvalues().reverse();
  const int rank = rank_info(ev, tol_ratio).rank;
  if (rank == 0) return Eigen::VectorXcd::Zero(n);
  if (rank == 1) {
    Eigen::VectorXd x = std::sqrt(std::max(ev(0), 0.0)) * es.eigenvectors().col(2 * n - 1);
    Eigen::VectorXcd z(n);
    for (int i = 0; i < n; ++i) z(i) = Complex(x(i), x(n + i));
    normalize_global_phase(z);
    return z;
  }
  if (rank != 2) return std::nullopt;
  const double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
  const Eigen::MatrixXd A = X.topLeftCorner(n, n), B = X.bottomLeftCorner(n, n), C = X.bottomRightCorner(n, n);
  const double tol = std::sqrt(tol_ratio) * scale;
  if ((A - C).cwiseAbs().maxCoeff() > tol || (B + B.transpose()).cwiseAbs().maxCoeff() > tol)
    return std::nullopt;
  return recover_solution(Eigen::MatrixXcd(2.0 * lambda_reduce(X)), tol_ratio);
}

}  // namespace cpop
