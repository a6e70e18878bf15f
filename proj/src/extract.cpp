#include "cpop/extract.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "cpop/linalg.hpp"

namespace cpop {

double AtomicMeasure::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

double AtomicMeasure::min_pairwise_distance() const {
  double m = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < atoms.size(); ++i)
    for (size_t j = i + 1; j < atoms.size(); ++j) m = std::min(m, (atoms[i] - atoms[j]).norm());
  return m;
}

namespace {

Complex power(const Eigen::VectorXcd& z, const Exponent& a) {
  Complex v = 1.0;
  for (int k = 0; k < z.size(); ++k)
    for (int t = 0; t < a[k]; ++t) v *= z(k);
  return v;
}

double scaled_min_eig(const Eigen::MatrixXcd& M) {
  if (M.rows() == 0) return 0.0;
  return min_eigenvalue(M) / std::max(1.0, M.norm());
}

// Eigenvalues above tol * ref, with ref the largest eigenvalue of the moment matrix.
int rank_of(const Eigen::MatrixXcd& M, double tol, double ref) {
  if (M.rows() == 0) return 0;
  const Eigen::VectorXd ev = hermitian_eig(M).values;
  int r = 0;
  for (int i = 0; i < ev.size(); ++i) r += std::abs(ev(i)) > tol * ref;
  return r;
}

// Block matrix of Point 3: B_rs(a, b) = y_{a + e_s, b + e_r} with e_0 = 0.
Eigen::MatrixXcd shift_block(const MomentSequence& y, const MonomialBasis& basis, const std::vector<int>& vars) {
  const int n = y.num_vars();
  const int m = basis.size();
  std::vector<Exponent> e{Exponent(n, 0)};
  for (int v : vars) e.push_back(unit_exponent(n, v));
  const int k = static_cast<int>(e.size());
  Eigen::MatrixXcd B(k * m, k * m);
  for (int r = 0; r < k; ++r)
    for (int s = 0; s < k; ++s)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          B(r * m + a, s * m + b) =
              y.get(add_exponents(basis.exponents[a], e[s]), add_exponents(basis.exponents[b], e[r]));
  return hermitian_part(B);
}

bool has_ball_constraint(const std::vector<PopConstraint>& constraints, int n) {
  // sum_k |z_k|^2 or a single |z_k|^2 against a constant, per variable.
  std::vector<bool> single(n, false);
  for (const auto& c : constraints) {
    std::vector<int> quad;
    bool ok = true;
    Complex lead = 0.0;
    for (const auto& [e, v] : c.g.terms()) {
      const int da = degree(e.alpha), db = degree(e.beta);
      if (da == 0 && db == 0) continue;
      if (da != 1 || db != 1 || e.alpha != e.beta) {
        ok = false;
        break;
      }
      if (lead == 0.0) lead = v;
      if (std::abs(v - lead) > 1e-12 || v.real() >= 0.0) {
        ok = false;
        break;
      }
      for (int k = 0; k < n; ++k)
        if (e.alpha[k]) quad.push_back(k);
    }
    if (!ok || quad.empty()) continue;
    if (static_cast<int>(quad.size()) == n) return true;
    if (quad.size() == 1) single[quad[0]] = true;
  }
  return std::all_of(single.begin(), single.end(), [](bool b) { return b; });
}

// Off-diagonal mass of a family.
double offdiag_norm2(const std::vector<Eigen::MatrixXcd>& A) {
  double s = 0.0;
  for (const auto& M : A) s += M.squaredNorm() - M.diagonal().squaredNorm();
  return s;
}

}  // namespace

MomentSequence moments_from_atoms(const AtomicMeasure& m, int d) {
  if (m.atoms.empty()) throw StructuralError("moments_from_atoms: empty measure");
  if (m.weights.size() != m.atoms.size()) throw StructuralError("moments_from_atoms: one weight per atom required");
  const int n = static_cast<int>(m.atoms[0].size());
  MomentSequence y(n);
  const MonomialBasis basis = monomial_basis(n, d);
  std::vector<std::vector<Complex>> pw(m.atoms.size());
  for (size_t j = 0; j < m.atoms.size(); ++j)
    for (const auto& a : basis.exponents) pw[j].push_back(power(m.atoms[j], a));
  for (int a = 0; a < basis.size(); ++a)
    for (int b = 0; b < basis.size(); ++b) {
      const ExponentPair e(basis.exponents[a], basis.exponents[b]);
      if (y.has(e)) continue;
      Complex v = 0.0;
      for (size_t j = 0; j < m.atoms.size(); ++j) v += m.weights[j] * std::conj(pw[j][a]) * pw[j][b];
      y.set(e, v);
    }
  return y;
}

int constraint_degree(const ComplexPop& p) {
  int dk = 0;
  for (const auto& c : p.constraints) dk = std::max(dk, degree_info(c.g).k);
  return std::max(dk, 1);
}

ExtractionReport check_conditions(const MomentSequence& y, int d, int d_K,
                                  const std::vector<PopConstraint>& constraints, const ExtractionOptions& opts) {
  if (d < d_K) throw StructuralError("check_conditions: d below d_K");
  if (y.degree() < d) throw StructuralError("check_conditions: moment sequence shorter than the order");
  const int n = y.num_vars();
  ExtractionReport r;
  r.d = d;
  r.d_K = d_K;
  const Eigen::MatrixXcd Md = moment_matrix(y, d);
  r.moment_psd = scaled_min_eig(Md) >= -opts.psd_tol;
  const double ref = std::max(hermitian_eig(Md).values(0), 1e-300);
  r.rank_d = rank_of(Md, opts.rank_tol, ref);
  r.rank_d_minus_dK = rank_of(moment_matrix(y, d - d_K), opts.rank_tol, ref);
  r.flatness = r.rank_d == r.rank_d_minus_dK;
  r.rank_one = r.rank_d == 1 && y.get(Exponent(n, 0), Exponent(n, 0)).real() > 0.0;
  r.localizing_psd = true;
  for (const auto& c : constraints) {
    const int k = degree_info(c.g).k;
    if (d - k >= 0) {
      const Eigen::MatrixXcd L = localizing_matrix(y, c.g, d - k);
      const double me = c.equality ? -L.norm() / std::max(1.0, Md.norm()) : scaled_min_eig(L);
      r.localizing_min_eig.push_back(me);
      if (me < -opts.psd_tol) r.localizing_psd = false;
    } else {
      r.localizing_min_eig.push_back(0.0);
    }
    const Eigen::MatrixXcd Lk = localizing_matrix(y, c.g, d - d_K);
    r.expected_zero_atoms.push_back(r.rank_d - rank_of(Lk, opts.rank_tol, ref));
  }
  const MonomialBasis low = monomial_basis(n, d - d_K);
  r.commuting_min_eig = std::numeric_limits<double>::infinity();
  if (d_K >= 1 && !r.rank_one) {
    if (n == 1) {
      r.commuting_min_eig = scaled_min_eig(shift_block(y, low, {0}));
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          r.commuting_min_eig = std::min(r.commuting_min_eig, scaled_min_eig(shift_block(y, low, {i, j})));
    }
    r.commuting_ok = r.commuting_min_eig >= -opts.psd_tol;
  } else {
    r.commuting_ok = true;
  }
  r.ball_constraint = has_ball_constraint(constraints, n);
  if (!r.ball_constraint)
    r.warnings.push_back("no ball or per-variable modulus constraint in K; atoms may lie outside a compact set");
  return r;
}

std::string to_string(ExtractionStatus s) {
  switch (s) {
    case ExtractionStatus::kExtracted: return "extracted";
    case ExtractionStatus::kConditionsFailed: return "conditions_failed";
    case ExtractionStatus::kExtractionFailed: return "extraction_failed";
  }
  return "unknown";
}

JointDiagonalization joint_diagonalize(const std::vector<Eigen::MatrixXcd>& family, unsigned seed, int max_sweeps) {
  JointDiagonalization out;
  if (family.empty()) return out;
  const int r = static_cast<int>(family[0].rows());
  // Hermitian parts: A = H1 + i H2 with H1, H2 Hermitian; normal commuting A give a
  // commuting Hermitian family with the same eigenvectors.
  std::vector<Eigen::MatrixXcd> H;
  for (const auto& A : family) {
    H.push_back((A + A.adjoint()) / 2.0);
    H.push_back((A - A.adjoint()) / Complex(0.0, 2.0));
  }
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(r, r);
  for (const auto& h : H) S += u(rng) * h;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian_part(S));
  Eigen::MatrixXcd Q = es.eigenvectors();
  double total = 0.0;
  for (auto& h : H) {
    total += h.squaredNorm();
    h = Q.adjoint() * h * Q;
  }
  const double eps = 1e-30 + 1e-28 * total;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (offdiag_norm2(H) <= 1e-30 * std::max(total, 1e-300)) break;
    bool rotated = false;
    for (int p = 0; p < r; ++p)
      for (int q = p + 1; q < r; ++q) {
        Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
        for (const auto& h : H) {
          const Eigen::Vector3d g((h(p, p) - h(q, q)).real(), 2.0 * h(p, q).real(), 2.0 * h(p, q).imag());
          G += g * g.transpose();
        }
        double off = 0.0;
        for (const auto& h : H) off += std::norm(h(p, q));
        if (off <= eps) continue;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> e3(G);
        Eigen::Vector3d v = e3.eigenvectors().col(2);
        if (v(0) < 0) v = -v;
        const double c = std::sqrt((1.0 + v(0)) / 2.0);
        const Complex s = Complex(v(1), -v(2)) / (2.0 * c);
        if (std::abs(s) < 1e-16) continue;
        rotated = true;
        // A <- R^H A R with R = I except [[c, -conj(s)], [s, c]] on (p, q).
        for (auto& h : H) {
          const Eigen::VectorXcd cp = h.col(p), cq = h.col(q);
          h.col(p) = c * cp + s * cq;
          h.col(q) = -std::conj(s) * cp + c * cq;
          const Eigen::RowVectorXcd rp = h.row(p), rq = h.row(q);
          h.row(p) = c * rp + std::conj(s) * rq;
          h.row(q) = -s * rp + c * rq;
        }
        const Eigen::VectorXcd qp = Q.col(p), qq = Q.col(q);
        Q.col(p) = c * qp + s * qq;
        Q.col(q) = -std::conj(s) * qp + c * qq;
      }
    if (!rotated) break;
  }
  out.Q = Q;
  out.sweeps = sweep;
  out.offdiag = std::sqrt(offdiag_norm2(H) / std::max(total, 1e-300));
  return out;
}

ExtractionResult extract_atoms(const MomentSequence& y, int d, int d_K, const ExtractionOptions& opts) {
  const int n = y.num_vars();
  ExtractionResult res;
  res.report.d = d;
  res.report.d_K = d_K;
  const MonomialBasis basis = monomial_basis(n, d);
  const Eigen::MatrixXcd M = moment_matrix(y, d);
  const HermitianEigen eig = hermitian_eig(M);
  const int r = rank_info(eig.values, opts.rank_tol).rank;
  res.report.rank_d = r;
  if (r == 0) {
    res.status = ExtractionStatus::kExtractionFailed;
    return res;
  }
  // M = X^H X with the columns x_alpha of X in C^r.
  Eigen::MatrixXcd X(r, basis.size());
  for (int i = 0; i < r; ++i) X.row(i) = std::sqrt(std::max(eig.values(i), 0.0)) * eig.vectors.col(i).adjoint();

  std::map<Exponent, int> index;
  for (int a = 0; a < basis.size(); ++a) index[basis.exponents[a]] = a;
  std::vector<int> src;
  for (int a = 0; a < basis.size(); ++a)
    if (degree(basis.exponents[a]) <= d - 1) src.push_back(a);
  Eigen::MatrixXcd XS(r, src.size());
  for (size_t t = 0; t < src.size(); ++t) XS.col(t) = X.col(src[t]);
  const Eigen::MatrixXcd pinv = XS.completeOrthogonalDecomposition().pseudoInverse();

  std::vector<Eigen::MatrixXcd> T;
  double tnorm = 0.0;
  for (int k = 0; k < n; ++k) {
    Eigen::MatrixXcd XT(r, src.size());
    for (size_t t = 0; t < src.size(); ++t)
      XT.col(t) = X.col(index.at(add_exponents(basis.exponents[src[t]], unit_exponent(n, k))));
    T.push_back(XT * pinv);
    tnorm = std::max(tnorm, T.back().norm());
  }
  double comm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      comm = std::max(comm, (T[i].adjoint() * T[j] - T[j] * T[i].adjoint()).norm());
      if (i < j) comm = std::max(comm, (T[i] * T[j] - T[j] * T[i]).norm());
    }
  const double scale = std::max(1e-300, tnorm * std::max(1.0, tnorm));
  res.commutator_residual = comm / scale;
  if (res.commutator_residual > opts.commute_tol) {
    res.status = ExtractionStatus::kExtractionFailed;
    return res;
  }

  const JointDiagonalization jd = joint_diagonalize(T, opts.seed);
  res.offdiag_residual = jd.offdiag;
  res.jacobi_sweeps = jd.sweeps;
  const Eigen::VectorXcd x0 = X.col(index.at(Exponent(n, 0)));
  AtomicMeasure raw;
  for (int j = 0; j < r; ++j) {
    const Eigen::VectorXcd q = jd.Q.col(j);
    Eigen::VectorXcd z(n);
    for (int k = 0; k < n; ++k) z(k) = q.dot(T[k] * q);  // q^H T_k q
    raw.atoms.push_back(z);
    raw.weights.push_back(std::norm(q.dot(x0)));
  }
  // Merge atoms closer than the clustering tolerance.
  AtomicMeasure m;
  for (int j = 0; j < raw.size(); ++j) {
    bool merged = false;
    for (int i = 0; i < m.size(); ++i)
      if ((m.atoms[i] - raw.atoms[j]).norm() <= opts.cluster_tol) {
        const double w = m.weights[i] + raw.weights[j];
        if (w > 0) m.atoms[i] = (m.weights[i] * m.atoms[i] + raw.weights[j] * raw.atoms[j]) / w;
        m.weights[i] = w;
        merged = true;
        break;
      }
    if (!merged) {
      m.atoms.push_back(raw.atoms[j]);
      m.weights.push_back(raw.weights[j]);
    }
  }
  // Deterministic order: lexicographic in (Re z_1, Im z_1, Re z_2, ...).
  std::vector<int> order(m.size());
  for (int i = 0; i < m.size(); ++i) order[i] = i;
  auto key = [&](int i) {
    std::vector<double> k;
    for (int c = 0; c < n; ++c) {
      k.push_back(std::round(m.atoms[i](c).real() * 1e8) / 1e8);
      k.push_back(std::round(m.atoms[i](c).imag() * 1e8) / 1e8);
    }
    return k;
  };
  std::sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b); });
  for (int i : order) {
    res.measure.atoms.push_back(m.atoms[i]);
    res.measure.weights.push_back(m.weights[i]);
  }
  res.status = ExtractionStatus::kExtracted;
  return res;
}

ExtractionResult extract_solution(const MomentSequence& y, int d, int d_min, int d_K,
                                  const std::vector<PopConstraint>& constraints, const ExtractionOptions& opts) {
  ExtractionResult last;
  last.status = ExtractionStatus::kConditionsFailed;
  for (int t = d; t >= std::max(d_min, d_K); --t) {
    ExtractionReport rep = check_conditions(y, t, d_K, constraints, opts);
    if (!rep.passed()) {
      if (t == d) last.report = rep;
      continue;
    }
    ExtractionResult res = extract_atoms(y, t, d_K, opts);
    res.report = rep;
    if (res.status == ExtractionStatus::kExtracted) return res;
    last = res;
  }
  return last;
}

CertificationReport certify(const ComplexPop& p, double bound, const AtomicMeasure& m, const SosCertificate* sos,
                            double tol, const ExtractionReport* report) {
  CertificationReport out;
  out.bound = bound;
  out.zero_atoms.assign(p.constraints.size(), 0);
  out.certified = !m.atoms.empty();
  // Multipliers per constraint (several cliques may contribute).
  std::vector<ComplexPolynomial> sigma(p.constraints.size(), ComplexPolynomial(p.n));
  if (sos)
    for (const auto& mult : sos->multipliers)
      if (mult.constraint >= 0 && mult.constraint < static_cast<int>(sigma.size())) sigma[mult.constraint] += mult.poly;
  for (int j = 0; j < m.size(); ++j) {
    AtomCertificate a;
    a.z = m.atoms[j];
    a.weight = m.weights[j];
    a.objective = p.objective_value(a.z);
    double worst = 0.0;
    for (size_t i = 0; i < p.constraints.size(); ++i) {
      const auto& c = p.constraints[i];
      const double g = c.g.evaluate(a.z).real();
      const double v = c.equality ? std::abs(g) : -g;
      if (v > worst) {
        worst = v;
        a.violated = c.name.empty() ? "g" + std::to_string(i + 1) : c.name;
      }
      if (std::abs(g) <= tol) ++out.zero_atoms[i];
    }
    a.max_violation = std::max(0.0, worst);
    a.feasible = a.max_violation <= tol;
    if (a.feasible) a.violated.clear();
    a.optimal = std::abs(a.objective - bound) <= tol * (1.0 + std::abs(bound));
    if (sos) {
      Eigen::VectorXcd grad = wirtinger_gradient(p.objective, a.z);
      double comp = 0.0;
      for (size_t i = 0; i < p.constraints.size(); ++i) {
        const double s = sigma[i].evaluate(a.z).real();
        grad -= s * wirtinger_gradient(p.constraints[i].g, a.z);
        comp = std::max(comp, std::abs(s * p.constraints[i].g.evaluate(a.z).real()));
      }
      a.kkt_stationarity = grad.norm();
      a.kkt_complementarity = comp;
    }
    out.certified = out.certified && a.feasible && a.optimal;
    out.atoms.push_back(std::move(a));
  }
  if (report && report->expected_zero_atoms.size() == p.constraints.size())
    for (size_t i = 0; i < p.constraints.size(); ++i)
      if (report->expected_zero_atoms[i] != out.zero_atoms[i]) out.zero_counts_match = false;
  return out;
}

namespace {

nlohmann::json complex_vector(const Eigen::VectorXcd& z) {
  nlohmann::json a = nlohmann::json::array();
  for (int k = 0; k < z.size(); ++k) a.push_back({z(k).real(), z(k).imag()});
  return a;
}

}  // namespace

nlohmann::json to_json(const AtomicMeasure& m) {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < m.size(); ++i) j.push_back({{"z", complex_vector(m.atoms[i])}, {"weight", m.weights[i]}});
  return j;
}

nlohmann::json to_json(const ExtractionReport& r) {
  return {{"d", r.d},
          {"d_K", r.d_K},
          {"rank_d", r.rank_d},
          {"rank_d_minus_dK", r.rank_d_minus_dK},
          {"moment_psd", r.moment_psd},
          {"localizing_psd", r.localizing_psd},
          {"localizing_min_eig", r.localizing_min_eig},
          {"flatness", r.flatness},
          {"commuting_ok", r.commuting_ok},
          {"commuting_min_eig", std::isfinite(r.commuting_min_eig) ? nlohmann::json(r.commuting_min_eig) : nullptr},
          {"rank_one", r.rank_one},
          {"ball_constraint", r.ball_constraint},
          {"expected_zero_atoms", r.expected_zero_atoms},
          {"warnings", r.warnings},
          {"passed", r.passed()}};
}

nlohmann::json to_json(const ExtractionResult& r) {
  return {{"status", to_string(r.status)},
          {"report", to_json(r.report)},
          {"atoms", to_json(r.measure)},
          {"commutator_residual", r.commutator_residual},
          {"offdiag_residual", r.offdiag_residual},
          {"jacobi_sweeps", r.jacobi_sweeps}};
}

nlohmann::json to_json(const CertificationReport& r) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : r.atoms) {
    nlohmann::json j = {{"z", complex_vector(a.z)},        {"weight", a.weight},
                        {"objective", a.objective},        {"max_violation", a.max_violation},
                        {"feasible", a.feasible},          {"optimal", a.optimal}};
    if (!a.violated.empty()) j["violated"] = a.violated;
    if (a.kkt_stationarity >= 0) {
      j["kkt_stationarity"] = a.kkt_stationarity;
      j["kkt_complementarity"] = a.kkt_complementarity;
    }
    atoms.push_back(j);
  }
  return {{"bound", r.bound},
          {"atoms", atoms},
          {"zero_atoms", r.zero_atoms},
          {"zero_counts_match", r.zero_counts_match},
          {"certified", r.certified}};
}

}  // namespace cpop
