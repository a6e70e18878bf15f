#include "cpop/moment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "cpop/linalg.hpp"

namespace cpop {

std::string to_string(Invariance inv) {
  switch (inv) {
    case Invariance::kNone: return "none";
    case Invariance::kTorus: return "torus";
    case Invariance::kSignFlip: return "pm1";
  }
  return "none";
}

Invariance invariance_from_string(const std::string& s) {
  if (s == "none") return Invariance::kNone;
  if (s == "torus") return Invariance::kTorus;
  if (s == "pm1") return Invariance::kSignFlip;
  throw StructuralError("unknown invariance '" + s + "' (expected none, torus or pm1)");
}

MonomialBasis monomial_basis(int n, const std::vector<int>& vars_in, int d, Invariance inv) {
  if (d < 0) throw StructuralError("basis degree must be nonnegative");
  MonomialBasis b;
  b.n = n;
  b.vars = vars_in;
  std::sort(b.vars.begin(), b.vars.end());
  b.vars.erase(std::unique(b.vars.begin(), b.vars.end()), b.vars.end());
  for (int v : b.vars)
    if (v < 0 || v >= n) throw StructuralError("basis variable out of range");
  b.d = d;
  b.invariance = inv;
  Exponent e(n, 0);
  std::function<void(size_t, int)> rec = [&](size_t k, int left) {
    if (k == b.vars.size()) {
      b.exponents.push_back(e);
      return;
    }
    for (int p = 0; p <= left; ++p) {
      e[b.vars[k]] = p;
      rec(k + 1, left - p);
    }
    e[b.vars[k]] = 0;
  };
  rec(0, d);
  std::sort(b.exponents.begin(), b.exponents.end(), graded_less);
  const int ngroups = inv == Invariance::kNone ? 1 : inv == Invariance::kTorus ? d + 1 : std::min(d + 1, 2);
  b.groups.assign(ngroups, {});
  for (int a = 0; a < b.size(); ++a) {
    const int deg = degree(b.exponents[a]);
    const int g = inv == Invariance::kNone ? 0 : inv == Invariance::kTorus ? deg : deg % 2;
    b.groups[g].push_back(a);
  }
  b.groups.erase(std::remove_if(b.groups.begin(), b.groups.end(), [](const auto& g) { return g.empty(); }),
                 b.groups.end());
  return b;
}

MonomialBasis monomial_basis(int n, int d, Invariance inv) {
  std::vector<int> all(n);
  for (int k = 0; k < n; ++k) all[k] = k;
  return monomial_basis(n, all, d, inv);
}

namespace {

bool is_canonical(const ExponentPair& e) { return !ExponentPairLess()(e.mirrored(), e); }

double pair_scale(const ExponentPair& e, double R) {
  return std::pow(R, degree(e.alpha) + degree(e.beta));
}

}  // namespace

int MomentSequence::degree() const {
  int d = 0;
  for (const auto& [e, v] : values_) d = std::max({d, cpop::degree(e.alpha), cpop::degree(e.beta)});
  return d;
}

void MomentSequence::set(const ExponentPair& e, Complex v) {
  if (e.size() != n_) throw StructuralError("moment exponent length differs from sequence");
  if (is_canonical(e))
    values_[e] = e.alpha == e.beta ? Complex(v.real(), 0.0) : v;
  else
    values_[e.mirrored()] = std::conj(v);
}

bool MomentSequence::has(const ExponentPair& e) const {
  return values_.count(is_canonical(e) ? e : e.mirrored()) > 0;
}

Complex MomentSequence::get(const ExponentPair& e) const {
  const bool canon = is_canonical(e);
  auto it = values_.find(canon ? e : e.mirrored());
  if (it == values_.end()) throw StructuralError("moment outside the stored truncation");
  return canon ? it->second : std::conj(it->second);
}

MomentSequence MomentSequence::scaled(double factor) const {
  MomentSequence y(n_);
  for (const auto& [e, v] : values_) y.values_[e] = v * factor;
  return y;
}

Complex riesz_eval(const MomentSequence& y, const ComplexPolynomial& f) {
  if (f.num_vars() != y.num_vars()) throw StructuralError("riesz_eval: variable count mismatch");
  Complex s = 0.0;
  for (const auto& [e, c] : f.terms()) s += c * y.get(e);
  return s;
}

Eigen::MatrixXcd localizing_matrix(const MomentSequence& y, const ComplexPolynomial& g,
                                   const MonomialBasis& basis) {
  const int m = basis.size();
  Eigen::MatrixXcd M(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      Complex s = 0.0;
      for (const auto& [e, c] : g.terms())
        s += c * y.get(add_exponents(basis.exponents[a], e.alpha), add_exponents(basis.exponents[b], e.beta));
      M(a, b) = s;
      M(b, a) = std::conj(s);
    }
  for (int a = 0; a < m; ++a) M(a, a) = M(a, a).real();
  return M;
}

Eigen::MatrixXcd localizing_matrix(const MomentSequence& y, const ComplexPolynomial& g, int d) {
  return localizing_matrix(y, g, monomial_basis(y.num_vars(), d));
}

Eigen::MatrixXcd moment_matrix(const MomentSequence& y, int d) {
  return localizing_matrix(y, ComplexPolynomial::constant(y.num_vars(), 1.0), d);
}

ComplexPop add_sphere_slack(const ComplexPop& p, double R, bool with_bijection) {
  if (!(R > 0)) throw StructuralError("sphere radius must be positive");
  p.validate();
  const int n = p.n;
  std::vector<int> map(n);
  for (int k = 0; k < n; ++k) map[k] = k;
  auto lift = [&](const ComplexPolynomial& f) { return f.relabel(n + 1, map); };
  ComplexPop q;
  q.n = n + 1;
  q.objective = lift(p.objective);
  for (const auto& c : p.constraints) {
    PopConstraint d = c;
    d.g = lift(c.g);
    q.constraints.push_back(d);
  }
  for (const auto& nc : p.norm_constraints) {
    NormConstraint d = nc;
    for (auto& part : d.parts) part = lift(part);
    q.norm_constraints.push_back(d);
  }
  for (const auto& qc : p.quadratic_costs) {
    QuadraticCost d = qc;
    d.p = lift(qc.p);
    q.quadratic_costs.push_back(d);
  }
  ComplexPolynomial s = ComplexPolynomial::constant(n + 1, R * R);
  for (int k = 0; k <= n; ++k) s -= ComplexPolynomial::abs2(n + 1, k);
  q.constraints.push_back({s, true, "sphere"});
  if (with_bijection) {
    const auto zs = ComplexPolynomial::variable(n + 1, n);
    const auto zsc = ComplexPolynomial::conj_variable(n + 1, n);
    q.constraints.push_back({Complex(0, 1) * zs - Complex(0, 1) * zsc, true, "slack_real"});
    q.constraints.push_back({zs + zsc, false, "slack_nonneg"});
  }
  q.ball_radius = R;
  return q;
}

ComplexPop add_clique_sphere_slacks(const ComplexPop& p, CliqueDecomposition& dec,
                                    const std::vector<double>& radii) {
  p.validate();
  const int n = p.n;
  const int np = static_cast<int>(dec.cliques.size());
  if (static_cast<int>(radii.size()) != np) throw StructuralError("one radius per clique required");
  if (dec.n != n) throw StructuralError("decomposition does not match the problem");
  std::vector<int> map(n);
  for (int k = 0; k < n; ++k) map[k] = k;
  const int N = n + np;
  auto lift = [&](const ComplexPolynomial& f) { return f.relabel(N, map); };
  ComplexPop q;
  q.n = N;
  q.objective = lift(p.objective);
  for (auto c : p.constraints) {
    c.g = lift(c.g);
    q.constraints.push_back(c);
  }
  for (auto nc : p.norm_constraints) {
    for (auto& part : nc.parts) part = lift(part);
    q.norm_constraints.push_back(nc);
  }
  for (auto qc : p.quadratic_costs) {
    qc.p = lift(qc.p);
    q.quadratic_costs.push_back(qc);
  }
  double total = 0.0;
  CouplingGraph ext(N);
  ext.edges = dec.extension.edges;
  for (int l = 0; l < np; ++l) {
    if (!(radii[l] > 0)) throw StructuralError("sphere radius must be positive");
    ComplexPolynomial s = ComplexPolynomial::constant(N, radii[l] * radii[l]);
    for (int k : dec.cliques[l]) s -= ComplexPolynomial::abs2(N, k);
    s -= ComplexPolynomial::abs2(N, n + l);
    q.constraints.push_back({s, true, "sphere_clique_" + std::to_string(l + 1)});
    total += radii[l] * radii[l];
    for (int k : dec.cliques[l]) ext.add_edge(k, n + l);
    dec.cliques[l].push_back(n + l);
    dec.elimination_order.insert(dec.elimination_order.begin(), n + l);
  }
  dec.n = N;
  dec.extension = ext;
  dec.covers.clear();
  dec.clique_orders.clear();
  q.ball_radius = std::sqrt(total);
  return q;
}

TraceBoundReport trace_bound_check(const MomentSequence& y, double R, int d, double tol) {
  TraceBoundReport r;
  const MonomialBasis b = monomial_basis(y.num_vars(), d);
  for (const auto& a : b.exponents) r.trace += y.get(a, a).real();
  double s = 0.0;
  for (int l = 0; l <= d; ++l) s += std::pow(R, 2 * l);
  Exponent zero(y.num_vars(), 0);
  r.bound = y.get(zero, zero).real() * s;
  r.slack = r.bound - r.trace;
  r.passed = r.slack >= -tol * std::max(1.0, std::abs(r.bound));
  return r;
}

int MomentRelaxation::max_order() const {
  int d = 0;
  for (int o : decomposition.clique_orders) d = std::max(d, o);
  return d;
}

MomentSequence MomentRelaxation::moments(const Eigen::VectorXd& x) const {
  MomentSequence y(n);
  for (const auto& [e, r] : refs) {
    if (!is_canonical(e) && refs.count(e.mirrored())) continue;
    Complex v = r.constant;
    if (r.re >= 0) v += x(r.re);
    if (r.im >= 0) v += Complex(0.0, r.im_sign * x(r.im));
    y.set(e, v * pair_scale(e, scale));
  }
  Exponent zero(n, 0);
  if (!y.has(ExponentPair(zero, zero))) y.set(ExponentPair(zero, zero), 1.0);
  return y;
}

nlohmann::json MomentRelaxation::index_map() const {
  nlohmann::json j;
  j["n"] = n;
  j["scale"] = scale;
  j["invariance"] = to_string(invariance);
  j["hankel"] = hankel;
  j["orders"] = orders;
  j["clique_orders"] = decomposition.clique_orders;
  j["cliques"] = decomposition.cliques;
  nlohmann::json mom = nlohmann::json::array();
  for (const auto& [e, r] : refs) {
    if (!is_canonical(e) && refs.count(e.mirrored())) continue;
    mom.push_back({{"alpha", e.alpha}, {"beta", e.beta}, {"re", r.re}, {"im", r.im},
                   {"im_sign", r.im_sign}, {"constant", r.constant}});
  }
  j["moments"] = mom;
  nlohmann::json blk = nlohmann::json::array();
  static const char* kinds[] = {"moment", "localizing", "localizing_equality", "norm", "epigraph", "box"};
  for (const auto& b : blocks)
    blk.push_back({{"kind", kinds[static_cast<int>(b.kind)]}, {"clique", b.clique}, {"constraint", b.constraint},
                   {"size", b.basis.size()}, {"first_row", b.first_row}});
  j["blocks"] = blk;
  return j;
}

CliqueDecomposition prepare_decomposition(const ComplexPop& p, const std::vector<int>& orders,
                                          bool sparse, int min_order) {
  std::vector<std::vector<int>> supports;
  std::vector<int> kis;
  for (const auto& c : p.constraints) {
    supports.push_back(support(c.g));
    kis.push_back(degree_info(c.g).k);
  }
  CliqueDecomposition dec;
  if (sparse) {
    std::vector<ComplexPolynomial> polys{p.objective};
    for (const auto& c : p.constraints) polys.push_back(c.g);
    for (const auto& nc : p.norm_constraints) polys.insert(polys.end(), nc.parts.begin(), nc.parts.end());
    for (const auto& qc : p.quadratic_costs) polys.push_back(qc.p);
    CouplingGraph g = con_coupling_graph(mono_coupling_graph(p.n, polys), orders, kis, supports);
    dec = chordal_extend_and_cliques(g);
  } else {
    dec = dense_decomposition(p.n);
  }
  assign_covers_and_orders(dec, supports, orders, kis, min_order);
  return dec;
}

namespace {

using ComplexAffine = std::pair<AffineExpr, AffineExpr>;

class Assembler {
 public:
  Assembler(int n, Invariance inv, bool hankel, ConicBuilder& cb,
            std::map<ExponentPair, MomentRef, ExponentPairLess>& refs)
      : n_(n), inv_(inv), hankel_(hankel), cb_(cb), refs_(refs) {}

  MomentRef ref(const ExponentPair& e) {
    auto it = refs_.find(e);
    if (it != refs_.end()) return it->second;
    MomentRef r;
    const int da = degree(e.alpha), db = degree(e.beta);
    if (da + db == 0) {
      r.constant = 1.0;
    } else if ((inv_ == Invariance::kTorus && da != db) || (inv_ == Invariance::kSignFlip && (da + db) % 2 != 0)) {
      // fixed zero
    } else if (hankel_) {
      const ExponentPair key(Exponent(n_, 0), add_exponents(e.alpha, e.beta));
      auto k = hankel_vars_.find(key);
      if (k == hankel_vars_.end()) k = hankel_vars_.emplace(key, cb_.add_variable()).first;
      r.re = k->second;
    } else {
      const bool canon = is_canonical(e);
      const ExponentPair c = canon ? e : e.mirrored();
      auto k = vars_.find(c);
      if (k == vars_.end()) {
        const int re = cb_.add_variable();
        const int im = c.alpha == c.beta ? -1 : cb_.add_variable();
        k = vars_.emplace(c, std::make_pair(re, im)).first;
      }
      r.re = k->second.first;
      r.im = k->second.second;
      r.im_sign = canon ? 1.0 : -1.0;
    }
    refs_.emplace(e, r);
    return r;
  }

  // L_y(g conj(z^a) z^b) as (Re, Im) affine expressions.
  ComplexAffine riesz(const ComplexPolynomial& g, const Exponent& a, const Exponent& b) {
    AffineExpr re, im;
    for (const auto& [e, c] : g.terms()) {
      const MomentRef r = ref(ExponentPair(add_exponents(a, e.alpha), add_exponents(b, e.beta)));
      re.constant += c.real() * r.constant;
      im.constant += c.imag() * r.constant;
      if (r.re >= 0) {
        re.add(r.re, c.real());
        im.add(r.re, c.imag());
      }
      if (r.im >= 0) {
        re.add(r.im, -c.imag() * r.im_sign);
        im.add(r.im, c.real() * r.im_sign);
      }
    }
    return {compress(re), compress(im)};
  }

  ComplexAffine riesz(const ComplexPolynomial& g) {
    Exponent z(n_, 0);
    return riesz(g, z, z);
  }

  const std::map<ExponentPair, std::pair<int, int>, ExponentPairLess>& vars() const { return vars_; }
  const std::map<ExponentPair, int, ExponentPairLess>& hankel_vars() const { return hankel_vars_; }

 private:
  static AffineExpr compress(const AffineExpr& e) {
    std::map<int, double> acc;
    for (const auto& [v, c] : e.terms) acc[v] += c;
    AffineExpr out(e.constant);
    for (const auto& [v, c] : acc)
      if (std::abs(c) > 1e-15) out.terms.emplace_back(v, c);
    return out;
  }

  int n_;
  Invariance inv_;
  bool hankel_;
  ConicBuilder& cb_;
  std::map<ExponentPair, MomentRef, ExponentPairLess>& refs_;
  std::map<ExponentPair, std::pair<int, int>, ExponentPairLess> vars_;
  std::map<ExponentPair, int, ExponentPairLess> hankel_vars_;
};

ComplexPop scale_problem(const ComplexPop& p, double R) {
  if (R == 1.0) return p;
  const Eigen::VectorXd s = Eigen::VectorXd::Constant(p.n, R);
  ComplexPop q = p;
  q.objective = p.objective.scale_vars(s);
  for (auto& c : q.constraints) c.g = c.g.scale_vars(s);
  for (auto& nc : q.norm_constraints)
    for (auto& part : nc.parts) part = part.scale_vars(s);
  for (auto& qc : q.quadratic_costs) qc.p = qc.p.scale_vars(s);
  q.ball_radius = 1.0;
  return q;
}

bool all_constant(const std::vector<ComplexAffine>& entries) {
  return std::all_of(entries.begin(), entries.end(),
                     [](const ComplexAffine& e) { return e.first.terms.empty() && e.second.terms.empty(); });
}

}  // namespace

MomentRelaxation build_moment_relaxation(const ComplexPop& p, const RelaxationOptions& opts) {
  p.validate();
  const int m = static_cast<int>(p.constraints.size());
  std::vector<int> orders = opts.orders;
  if (orders.empty()) orders.assign(m, opts.order > 0 ? opts.order : p.min_order());
  if (static_cast<int>(orders.size()) != m) throw StructuralError("one order per constraint required");
  if (opts.orders.empty() && opts.order > 0 && opts.order < p.objective_k())
    throw StructuralError("relaxation order below the objective half-degree");
  for (int i = 0; i < m; ++i)
    if (orders[i] < degree_info(p.constraints[i].g).k)
      throw StructuralError("order of constraint " + std::to_string(i + 1) + " below its half-degree");

  auto check_inv = [&](const ComplexPolynomial& f) {
    if (opts.invariance == Invariance::kTorus && !is_torus_invariant(f))
      throw StructuralError("torus invariance requested but the data is not torus invariant");
    if (opts.invariance == Invariance::kSignFlip && !is_sign_invariant(f))
      throw StructuralError("sign invariance requested but the data is not sign invariant");
  };
  check_inv(p.objective);
  for (const auto& c : p.constraints) check_inv(c.g);
  for (const auto& nc : p.norm_constraints)
    for (const auto& part : nc.parts) check_inv(part);
  for (const auto& qc : p.quadratic_costs) check_inv(qc.p);

  MomentRelaxation r;
  r.n = p.n;
  r.invariance = opts.invariance;
  r.hankel = opts.hankel;
  r.orders = orders;
  if (opts.scale_to_sphere && p.ball_radius && std::abs(*p.ball_radius - 1.0) > 1e-12) r.scale = *p.ball_radius;
  r.scaled_problem = scale_problem(p, r.scale);
  const ComplexPop& q = r.scaled_problem;

  int floor = std::max(1, p.objective_k());
  if (opts.orders.empty()) floor = std::max(floor, orders.empty() ? opts.order : orders[0]);
  for (const auto& nc : p.norm_constraints)
    for (const auto& part : nc.parts) floor = std::max(floor, degree_info(part).k);

  if (opts.decomposition) {
    r.decomposition = *opts.decomposition;
    if (r.decomposition.n != p.n) throw StructuralError("decomposition does not match the problem");
    std::vector<std::vector<int>> supports;
    std::vector<int> kis;
    for (const auto& c : p.constraints) {
      supports.push_back(support(c.g));
      kis.push_back(degree_info(c.g).k);
    }
    assign_covers_and_orders(r.decomposition, supports, orders, kis, floor);
  } else {
    r.decomposition = prepare_decomposition(p, orders, false, floor);
  }
  const CliqueDecomposition& dec = r.decomposition;

  ConicBuilder cb;
  Assembler as(p.n, opts.invariance, opts.hankel, cb, r.refs);

  // Objective
  {
    auto [re, im] = as.riesz(q.objective);
    for (const auto& [v, c] : re.terms) cb.add_cost(v, c);
    cb.add_offset(re.constant);
  }

  auto add_hermitian_blocks = [&](const ComplexPolynomial& g, const MonomialBasis& basis,
                                  RelaxationBlock::Kind kind, int clique, int constraint) {
    for (const auto& group : basis.groups) {
      const int sz = static_cast<int>(group.size());
      std::vector<ComplexAffine> entries;
      std::vector<std::vector<int>> pos(sz, std::vector<int>(sz, -1));
      for (int j = 0; j < sz; ++j)
        for (int i = j; i < sz; ++i) {
          pos[i][j] = static_cast<int>(entries.size());
          entries.push_back(as.riesz(g, basis.exponents[group[i]], basis.exponents[group[j]]));
        }
      if (all_constant(entries)) {
        Eigen::MatrixXcd C(sz, sz);
        for (int j = 0; j < sz; ++j)
          for (int i = j; i < sz; ++i) {
            const auto& e = entries[pos[i][j]];
            C(i, j) = Complex(e.first.constant, e.second.constant);
            C(j, i) = std::conj(C(i, j));
          }
        if (min_eigenvalue(C) >= -1e-12) continue;
      }
      RelaxationBlock blk;
      blk.kind = kind;
      blk.clique = clique;
      blk.constraint = constraint;
      for (int a : group) blk.basis.push_back(basis.exponents[a]);
      blk.first_row = cb.num_cone_rows();
      if (sz == 1) {
        blk.scalar = true;
        cb.add_nonnegative(entries[0].first);
      } else {
        cb.add_hermitian_psd(sz, [&](int i, int j) { return entries[pos[i][j]]; });
      }
      r.blocks.push_back(std::move(blk));
    }
  };

  const ComplexPolynomial one = ComplexPolynomial::constant(p.n, 1.0);
  for (int l = 0; l < static_cast<int>(dec.cliques.size()); ++l)
    add_hermitian_blocks(one, monomial_basis(p.n, dec.cliques[l], dec.clique_orders[l], opts.invariance),
                         RelaxationBlock::Kind::kMoment, l, -1);

  for (int i = 0; i < m; ++i) {
    const auto& c = q.constraints[i];
    const int t = orders[i] - degree_info(c.g).k;
    const MonomialBasis basis = monomial_basis(p.n, dec.cover_vertices(i), t, opts.invariance);
    const int clique = dec.covers[i].size() == 1 ? dec.covers[i][0] : -1;
    if (!c.equality) {
      add_hermitian_blocks(c.g, basis, RelaxationBlock::Kind::kLocalizing, clique, i);
      continue;
    }
    for (const auto& group : basis.groups) {
      RelaxationBlock blk;
      blk.kind = RelaxationBlock::Kind::kLocalizingEquality;
      blk.clique = clique;
      blk.constraint = i;
      for (int a : group) blk.basis.push_back(basis.exponents[a]);
      blk.first_row = cb.num_equalities();
      const int sz = static_cast<int>(group.size());
      for (int b = 0; b < sz; ++b)
        for (int a = b; a < sz; ++a) {
          auto [re, im] = as.riesz(c.g, blk.basis[a], blk.basis[b]);
          for (int part = 0; part < (a == b ? 1 : 2); ++part) {
            const AffineExpr& e = part == 0 ? re : im;
            if (e.terms.empty() && std::abs(e.constant) <= 1e-14) continue;
            cb.add_equality(e);
            blk.rows.emplace_back(a, b, part == 1);
          }
        }
      if (!blk.rows.empty()) r.blocks.push_back(std::move(blk));
    }
  }

  for (int k = 0; k < static_cast<int>(q.norm_constraints.size()); ++k) {
    const auto& nc = q.norm_constraints[k];
    RelaxationBlock blk;
    blk.kind = RelaxationBlock::Kind::kNormCone;
    blk.constraint = k;
    blk.first_row = cb.num_cone_rows();
    std::vector<AffineExpr> soc{AffineExpr(nc.bound)};
    for (const auto& part : nc.parts) soc.push_back(as.riesz(part).first);
    cb.add_second_order(soc);
    r.blocks.push_back(blk);
  }
  for (int k = 0; k < static_cast<int>(q.quadratic_costs.size()); ++k) {
    const auto& qc = q.quadratic_costs[k];
    AffineExpr u = as.riesz(qc.p).first;
    if (qc.a == 0.0) {
      for (const auto& [v, c] : u.terms) cb.add_cost(v, qc.b * c);
      cb.add_offset(qc.b * u.constant + qc.c);
      continue;
    }
    RelaxationBlock blk;
    blk.kind = RelaxationBlock::Kind::kEpigraphCone;
    blk.constraint = k;
    blk.first_row = cb.num_cone_rows();
    // t >= a u^2 + b u + c  <=>  (r + 1, r - 1, 2u) in Q with r = (t - b u - c) / a
    const int tv = cb.add_variable(1.0);
    AffineExpr rr;
    rr.add(tv, 1.0 / qc.a);
    AffineExpr bu = u;
    bu *= -qc.b / qc.a;
    rr += bu;
    rr.constant -= qc.c / qc.a;
    AffineExpr r1 = rr, r2 = rr, u2 = u;
    r1.constant += 1.0;
    r2.constant -= 1.0;
    u2 *= 2.0;
    cb.add_second_order({r1, r2, u2});
    r.blocks.push_back(blk);
  }

  if (opts.variable_bounds) {
    const Eigen::VectorXd& vb = *opts.variable_bounds;
    if (vb.size() != p.n) throw StructuralError("one variable bound per variable required");
    RelaxationBlock blk;
    blk.kind = RelaxationBlock::Kind::kBox;
    blk.first_row = cb.num_cone_rows();
    auto box = [&](int v, const Exponent& s) {
      double b = 1.0;
      for (int k = 0; k < p.n; ++k) b *= std::pow(vb(k) / r.scale, s[k]);
      for (double sign : {1.0, -1.0}) {
        AffineExpr e(b);
        e.add(v, -sign);
        cb.add_nonnegative(e);
      }
    };
    for (const auto& [e, v] : as.vars()) {
      const Exponent s = add_exponents(e.alpha, e.beta);
      box(v.first, s);
      if (v.second >= 0) box(v.second, s);
    }
    for (const auto& [e, v] : as.hankel_vars()) box(v, e.beta);
    r.blocks.push_back(blk);
  }

  r.program = cb.build();
  return r;
}

}  // namespace cpop
