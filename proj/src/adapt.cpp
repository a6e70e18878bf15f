#include "cpop/adapt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "cpop/linalg.hpp"

namespace cpop {

namespace {

constexpr double kTwoPi = 6.283185307179586;

double wrap_pi(double a) {
  a = std::remainder(a, kTwoPi);  // [-pi, pi]
  if (a <= -M_PI) a += kTwoPi;
  return a;
}

Exponent unit(int n, int k) {
  Exponent e(n, 0);
  e[k] = 1;
  return e;
}

int find_root(std::vector<int>& parent, int a) {
  while (parent[a] != a) a = parent[a] = parent[parent[a]];
  return a;
}

nlohmann::json complex_vector(const Eigen::VectorXcd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back({v(k).real(), v(k).imag()});
  return a;
}

}  // namespace

void AdaptParams::validate() const {
  if (!(epsilon > 0.0)) throw StructuralError("mismatch tolerance must be positive");
  if (h < 1) throw StructuralError("number of highest mismatches must be at least 1");
  if (delta_max_min < 0) throw StructuralError("order spread cap must be nonnegative");
}

StitchResult stitch_candidate(const MomentSequence& y, const CliqueDecomposition& dec) {
  const int n = dec.n;
  const int p = static_cast<int>(dec.cliques.size());
  StitchResult r;
  r.u.resize(p);
  r.lambda1.assign(p, 0.0);
  r.lambda2.assign(p, 0.0);
  r.weights.assign(p, 0.0);
  r.theta.assign(p, 0.0);

  double top = 0.0;
  for (int l = 0; l < p; ++l) {
    const auto& C = dec.cliques[l];
    const int s = static_cast<int>(C.size());
    Eigen::MatrixXcd B(s, s);
    for (int a = 0; a < s; ++a)
      for (int b = 0; b < s; ++b) {
        const ExponentPair e(unit(n, C[a]), unit(n, C[b]));
        if (!y.has(e)) throw StructuralError("first-order moment missing for clique " + std::to_string(l + 1));
        B(a, b) = y.get(e);
      }
    B = hermitian_part(B);
    const RankOneApprox ra = nearest_rank1(B);
    // y(l) ~ conj(u) conj(u)^H, so u is the conjugate of the leading factor.
    r.u[l] = ra.u.conjugate();
    r.lambda1[l] = ra.lambda1;
    r.lambda2[l] = std::max(ra.lambda2, 0.0);
    top = std::max(top, ra.lambda1);
  }

  const double zero_tol = 1e-12 * std::max(top, 1e-300);
  std::vector<bool> zero(p, false);
  for (int l = 0; l < p; ++l)
    if (r.lambda1[l] <= zero_tol || top <= 0.0) {
      zero[l] = true;
      r.zero_blocks.push_back(l);
    }

  // Phase alignment: minimize sum (d_lmj + theta_l - theta_m)^2 over shared vertices, where
  // d_lmj = arg u(l)_j - arg u(m)_j unwrapped to (-pi, pi].
  struct Eq {
    int l, m;
    double d;
  };
  std::vector<Eq> eqs;
  std::vector<int> comp(p);
  std::iota(comp.begin(), comp.end(), 0);
  for (int l = 0; l < p; ++l) {
    if (zero[l]) continue;
    for (int m = l + 1; m < p; ++m) {
      if (zero[m]) continue;
      for (int j : dec.cliques[l]) {
        const auto& Cm = dec.cliques[m];
        auto it = std::lower_bound(Cm.begin(), Cm.end(), j);
        if (it == Cm.end() || *it != j) continue;
        const auto& Cl = dec.cliques[l];
        const int a = static_cast<int>(std::lower_bound(Cl.begin(), Cl.end(), j) - Cl.begin());
        const int b = static_cast<int>(it - Cm.begin());
        const Complex ul = r.u[l](a), um = r.u[m](b);
        const double floor_l = 1e-9 * std::sqrt(r.lambda1[l]), floor_m = 1e-9 * std::sqrt(r.lambda1[m]);
        if (std::abs(ul) <= floor_l || std::abs(um) <= floor_m) continue;
        eqs.push_back({l, m, wrap_pi(std::arg(ul) - std::arg(um))});
        comp[find_root(comp, l)] = find_root(comp, m);
      }
    }
  }
  // Pin the lowest-index clique of each component.
  std::vector<int> col(p, -1);
  std::map<int, int> pinned;
  int free_vars = 0;
  for (int l = 0; l < p; ++l) {
    const int root = find_root(comp, l);
    if (pinned.emplace(root, l).second) continue;
    col[l] = free_vars++;
  }
  if (free_vars > 0 && !eqs.empty()) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(eqs.size()), free_vars);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(eqs.size()));
    for (size_t k = 0; k < eqs.size(); ++k) {
      if (col[eqs[k].l] >= 0) A(k, col[eqs[k].l]) += 1.0;
      if (col[eqs[k].m] >= 0) A(k, col[eqs[k].m]) -= 1.0;
      rhs(k) = -eqs[k].d;
    }
    const Eigen::VectorXd t = A.colPivHouseholderQr().solve(rhs);
    for (int l = 0; l < p; ++l)
      if (col[l] >= 0) r.theta[l] = t(col[l]);
  }
  for (double& t : r.theta) {
    t = std::fmod(t, kTwoPi);
    if (t < 0) t += kTwoPi;
    if (t >= kTwoPi) t = 0.0;
  }

  // Weighted fit: lambda1/lambda2, and twice the largest ratio where lambda2 vanishes.
  double max_ratio = 0.0;
  std::vector<bool> rank_one(p, false);
  for (int l = 0; l < p; ++l) {
    if (zero[l]) continue;
    if (r.lambda2[l] <= 1e-12 * r.lambda1[l]) {
      rank_one[l] = true;
    } else {
      r.weights[l] = r.lambda1[l] / r.lambda2[l];
      max_ratio = std::max(max_ratio, r.weights[l]);
    }
  }
  for (int l = 0; l < p; ++l)
    if (rank_one[l]) r.weights[l] = max_ratio > 0.0 ? 2.0 * max_ratio : 1.0;

  Eigen::VectorXcd num = Eigen::VectorXcd::Zero(n);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(n);
  for (int l = 0; l < p; ++l) {
    if (zero[l]) continue;
    const Complex rot = std::polar(1.0, r.theta[l]);
    for (size_t a = 0; a < dec.cliques[l].size(); ++a) {
      const int j = dec.cliques[l][a];
      num(j) += r.weights[l] * r.u[l](a) * rot;
      den(j) += r.weights[l];
    }
  }
  r.z = Eigen::VectorXcd::Zero(n);
  for (int j = 0; j < n; ++j)
    if (den(j) > 0.0) r.z(j) = num(j) / den(j);
  return r;
}

std::vector<std::pair<int, int>> constraint_groups(const std::vector<PopConstraint>& constraints) {
  std::map<int, int> first;
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < static_cast<int>(constraints.size()); ++i) {
    const int g = constraints[i].group;
    if (g < 0) continue;
    auto [it, inserted] = first.emplace(g, i);
    if (!inserted) {
      if (it->second < 0) throw StructuralError("more than two constraints in group " + std::to_string(g));
      out.emplace_back(it->second, i);
      it->second = -1;
    }
  }
  return out;
}

std::vector<double> compute_mismatches(const MomentSequence& y, const Eigen::VectorXcd& z,
                                       const std::vector<PopConstraint>& constraints,
                                       const std::vector<std::pair<int, int>>& grouping) {
  const int m = static_cast<int>(constraints.size());
  std::vector<double> out(m);
  for (int i = 0; i < m; ++i) {
    const auto& c = constraints[i];
    out[i] = std::abs(riesz_eval(y, c.g) - c.g.evaluate(z)) * c.unit_scale;
  }
  for (auto [a, b] : grouping) {
    if (a < 0 || b < 0 || a >= m || b >= m) throw StructuralError("mismatch grouping index out of range");
    const double v = std::hypot(out[a], out[b]);
    out[a] = out[b] = v;
  }
  return out;
}

std::string to_string(AdvanceCase c) {
  switch (c) {
    case AdvanceCase::kNoSolution: return "no_solution";
    case AdvanceCase::kHighestBelowMax: return "highest_below_max";
    case AdvanceCase::kHighestAtMax: return "highest_at_max";
    case AdvanceCase::kUniform: return "uniform";
  }
  return "unknown";
}

AdvanceResult advance_orders(const std::vector<int>& orders, const std::vector<double>& mismatches,
                             const std::vector<std::vector<int>>& covers, const AdaptParams& params,
                             bool solved) {
  params.validate();
  const size_t m = orders.size();
  AdvanceResult r;
  r.orders = orders;
  auto uniform = [&](AdvanceCase c) {
    for (int& d : r.orders) ++d;
    r.which = c;
    return r;
  };
  if (m == 0) return uniform(solved ? AdvanceCase::kUniform : AdvanceCase::kNoSolution);
  if (!solved) return uniform(AdvanceCase::kNoSolution);
  if (mismatches.size() != m || covers.size() != m)
    throw StructuralError("orders, mismatches and covers differ in length");

  const int hmax = *std::max_element(orders.begin(), orders.end());
  const int hmin = *std::min_element(orders.begin(), orders.end());
  std::vector<int> M, Mp;
  for (size_t i = 0; i < m; ++i) {
    if (!(mismatches[i] > params.epsilon)) continue;
    (orders[i] < hmax ? M : Mp).push_back(static_cast<int>(i));
  }
  std::vector<int> pool;
  if (!M.empty()) {
    pool = M;
    r.which = AdvanceCase::kHighestBelowMax;
  } else if (!Mp.empty()) {
    pool = Mp;
    r.which = AdvanceCase::kHighestAtMax;
  } else {
    return uniform(AdvanceCase::kUniform);
  }
  std::stable_sort(pool.begin(), pool.end(), [&](int a, int b) { return mismatches[a] > mismatches[b]; });
  pool.resize(std::min(pool.size(), static_cast<size_t>(params.h)));
  r.selected = pool;

  std::vector<std::vector<int>> sorted(m);
  for (size_t j = 0; j < m; ++j) {
    sorted[j] = covers[j];
    std::sort(sorted[j].begin(), sorted[j].end());
  }
  std::vector<bool> raised(m, false);
  for (int i : pool)
    for (size_t j = 0; j < m; ++j)
      if (std::includes(sorted[i].begin(), sorted[i].end(), sorted[j].begin(), sorted[j].end()))
        raised[j] = true;
  for (size_t j = 0; j < m; ++j)
    if (raised[j]) ++r.orders[j];

  const int nmax = *std::max_element(r.orders.begin(), r.orders.end());
  const int nmin = *std::min_element(r.orders.begin(), r.orders.end());
  if (nmax - nmin > params.delta_max_min) {
    r.spread_lift = true;
    for (size_t j = 0; j < m; ++j)
      if (orders[j] == hmin && !raised[j]) ++r.orders[j];
  }
  return r;
}

std::string to_string(HierarchyStatus s) {
  switch (s) {
    case HierarchyStatus::kConverged: return "converged";
    case HierarchyStatus::kExtracted: return "extracted";
    case HierarchyStatus::kIterationLimit: return "iteration_limit";
    case HierarchyStatus::kOrderLimit: return "order_limit";
  }
  return "unknown";
}

double native_violation(const ComplexPop& p, const Eigen::VectorXcd& z) {
  double worst = 0.0;
  for (const auto& c : p.constraints) {
    const double g = c.g.evaluate(z).real();
    worst = std::max(worst, (c.equality ? std::abs(g) : -g) * c.unit_scale);
  }
  for (const auto& nc : p.norm_constraints) {
    double s = 0.0;
    for (const auto& part : nc.parts) s += std::norm(part.evaluate(z).real());
    worst = std::max(worst, std::sqrt(s) - nc.bound);
  }
  return worst;
}

HierarchyResult run_hierarchy(const ComplexPop& p, const HierarchyOptions& opts) {
  p.validate();
  opts.params.validate();
  const int m = static_cast<int>(p.constraints.size());
  std::vector<int> H;
  if (opts.initial_orders) {
    H = *opts.initial_orders;
    if (static_cast<int>(H.size()) != m) throw StructuralError("one initial order per constraint required");
  } else {
    const int dmin = std::max(1, p.min_order());
    for (const auto& c : p.constraints) H.push_back(opts.uniform_start ? dmin : std::max(1, degree_info(c.g).k));
  }
  const auto groups = constraint_groups(p.constraints);

  HierarchyResult res;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    HierarchyIteration rec;
    rec.iteration = it;
    rec.orders = H;

    // Problem actually relaxed: p itself or p with sphere slacks appended.
    ComplexPop q = p;
    std::vector<int> Hq = H;
    CliqueDecomposition dec;
    if (opts.sphere_slack == SphereSlack::kGlobal) {
      if (!p.ball_radius) throw StructuralError("global sphere slack needs a ball radius");
      q = add_sphere_slack(p, *p.ball_radius, true);
      Hq.resize(q.constraints.size(), 1);
      dec = prepare_decomposition(q, Hq, opts.sparse, 0);
    } else if (opts.sphere_slack == SphereSlack::kPerClique) {
      dec = prepare_decomposition(p, H, opts.sparse, 0);
      std::vector<double> radii;
      for (const auto& c : dec.cliques) {
        if (opts.clique_radius) radii.push_back(opts.clique_radius(c));
        else if (p.ball_radius) radii.push_back(*p.ball_radius);
        else throw StructuralError("per-clique sphere slack needs a ball radius");
      }
      q = add_clique_sphere_slacks(p, dec, radii);
      Hq.resize(q.constraints.size(), 1);
    } else {
      dec = prepare_decomposition(p, H, opts.sparse, 0);
    }
    const std::vector<PopConstraint> own(q.constraints.begin(), q.constraints.begin() + m);

    RelaxationOptions ro;
    ro.orders = Hq;
    ro.decomposition = dec;
    ro.invariance = opts.invariance;
    if (opts.variable_bounds && q.n > p.n) {
      Eigen::VectorXd vb(q.n);
      vb.head(p.n) = *opts.variable_bounds;
      vb.tail(q.n - p.n).setConstant(q.ball_radius.value_or(std::numeric_limits<double>::infinity()));
      ro.variable_bounds = vb;
    } else {
      ro.variable_bounds = opts.variable_bounds;
    }
    const MomentRelaxation r = build_moment_relaxation(q, ro);
    rec.clique_orders = r.decomposition.clique_orders;
    rec.cliques = r.decomposition.cliques;
    rec.psd_entries = r.psd_entries();
    const SolveResult s = solve_program(r.program, opts.solver);
    rec.status = s.status;
    rec.solved = s.status == SolveStatus::kOptimal;

    res.orders = H;
    res.decomposition = r.decomposition;
    bool done = false;
    std::vector<double> mism(m, 0.0);
    if (rec.solved) {
      rec.bound = s.primal_value;
      if (!res.has_bound || rec.bound > res.bound) res.bound = rec.bound;
      res.has_bound = true;
      const MomentSequence y = r.moments(s.x);
      res.y = y;
      const StitchResult st = stitch_candidate(y, r.decomposition);
      const Eigen::VectorXcd z = st.z.head(p.n);
      rec.zero_blocks = st.zero_blocks;
      rec.candidate = z;
      mism = compute_mismatches(y, st.z, own, groups);
      rec.mismatches = mism;
      rec.max_mismatch = mism.empty() ? 0.0 : *std::max_element(mism.begin(), mism.end());
      rec.candidate_objective = p.objective_value(z);
      rec.max_violation = native_violation(p, z);
      rec.feasible = opts.candidate_feasible ? opts.candidate_feasible(z) : rec.max_violation <= opts.feas_tol;
      rec.gap = std::abs(rec.candidate_objective - rec.bound) / std::max(1.0, std::abs(rec.bound));
      if (rec.feasible && rec.gap <= opts.gap_tol) {
        res.status = HierarchyStatus::kConverged;
        res.candidate = z;
        done = true;
      }
      const bool dense = r.decomposition.cliques.size() == 1 &&
                         static_cast<int>(r.decomposition.cliques[0].size()) == q.n;
      if (opts.try_extraction && dense && !q.has_second_order_extras()) {
        const int d = r.decomposition.clique_orders[0];
        try {
          const ExtractionResult e =
              extract_solution(y, d, q.min_order(), constraint_degree(q), q.constraints, opts.extraction);
          rec.extraction = to_string(e.status);
          if (e.status == ExtractionStatus::kExtracted) {
            const CertificationReport c = certify(q, rec.bound, e.measure, nullptr, opts.gap_tol, &e.report);
            if (c.certified) {
              AtomicMeasure mu = e.measure;
              for (auto& a : mu.atoms) a = Eigen::VectorXcd(a.head(p.n));
              res.atoms = mu;
              if (!done) {
                res.status = HierarchyStatus::kExtracted;
                if (!mu.atoms.empty()) res.candidate = mu.atoms.front();
                done = true;
              }
            } else {
              rec.extraction = "not_certified";
            }
          }
        } catch (const StructuralError&) {
          rec.extraction = "not_applicable";
        }
      }
    }

    if (!done) {
      std::vector<std::vector<int>> covers(m);
      for (int i = 0; i < m; ++i) {
        covers[i] = r.decomposition.cover_vertices(i);
        covers[i].erase(std::remove_if(covers[i].begin(), covers[i].end(), [&](int v) { return v >= p.n; }),
                        covers[i].end());
      }
      const AdvanceResult adv = advance_orders(H, mism, covers, opts.params, rec.solved);
      rec.advance = adv.which;
      rec.selected = adv.selected;
      H = adv.orders;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (opts.log) *opts.log << to_json(rec).dump() << '\n';
    res.history.push_back(std::move(rec));
    if (done) return res;
    if (!H.empty() && *std::max_element(H.begin(), H.end()) > opts.max_order) {
      res.status = HierarchyStatus::kOrderLimit;
      return res;
    }
  }
  res.status = HierarchyStatus::kIterationLimit;
  return res;
}

std::string to_string(SphereSlack s) {
  switch (s) {
    case SphereSlack::kOff: return "off";
    case SphereSlack::kGlobal: return "global";
    case SphereSlack::kPerClique: return "per-clique";
  }
  return "off";
}

SphereSlack sphere_slack_from_string(const std::string& s) {
  if (s == "off") return SphereSlack::kOff;
  if (s == "global") return SphereSlack::kGlobal;
  if (s == "per-clique") return SphereSlack::kPerClique;
  throw StructuralError("unknown sphere slack '" + s + "' (expected off, global or per-clique)");
}

nlohmann::json to_json(const HierarchyIteration& it) {
  nlohmann::json j;
  j["iteration"] = it.iteration;
  j["orders"] = it.orders;
  j["clique_orders"] = it.clique_orders;
  j["cliques"] = it.cliques;
  j["status"] = to_string(it.status);
  j["bound"] = it.solved ? nlohmann::json(it.bound) : nlohmann::json(nullptr);
  j["psd_entries"] = it.psd_entries;
  j["max_mismatch"] = it.max_mismatch;
  j["mismatches"] = it.mismatches;
  j["candidate"] = complex_vector(it.candidate);
  j["candidate_objective"] = it.candidate_objective;
  j["max_violation"] = it.max_violation;
  j["feasible"] = it.feasible;
  j["gap"] = it.gap;
  if (!it.zero_blocks.empty()) j["zero_blocks"] = it.zero_blocks;
  if (!it.extraction.empty()) j["extraction"] = it.extraction;
  j["advance"] = to_string(it.advance);
  j["selected"] = it.selected;
  j["seconds"] = it.seconds;
  return j;
}

nlohmann::json to_json(const HierarchyResult& r) {
  nlohmann::json j;
  j["status"] = to_string(r.status);
  j["bound"] = r.has_bound ? nlohmann::json(r.bound) : nlohmann::json(nullptr);
  j["orders"] = r.orders;
  j["cliques"] = r.decomposition.cliques;
  j["clique_orders"] = r.decomposition.clique_orders;
  if (r.candidate) j["candidate"] = complex_vector(*r.candidate);
  if (r.atoms) j["atoms"] = to_json(*r.atoms);
  j["iterations"] = nlohmann::json::array();
  for (const auto& it : r.history) j["iterations"].push_back(to_json(it));
  return j;
}

}  // namespace cpop
