#include "cpop/opf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

namespace cpop {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

bool finite(double x) { return std::isfinite(x); }

}  // namespace

int PowerNetwork::bus_index(int id) const {
  for (int k = 0; k < num_buses(); ++k)
    if (buses[k].id == id) return k;
  throw StructuralError("unknown bus id " + std::to_string(id));
}

void PowerNetwork::validate() const {
  if (!(base_mva > 0)) throw StructuralError("base MVA must be positive");
  std::set<int> ids;
  for (const auto& b : buses) {
    if (!ids.insert(b.id).second) throw StructuralError("duplicate bus id " + std::to_string(b.id));
    if (b.vmin > b.vmax) throw StructuralError("bus " + std::to_string(b.id) + ": v_min exceeds v_max");
  }
  for (const auto& g : gens) {
    if (!ids.count(g.bus)) throw StructuralError("generator on unknown bus " + std::to_string(g.bus));
  }
  for (const auto& br : branches) {
    const std::string tag = "branch " + std::to_string(br.from) + "-" + std::to_string(br.to);
    if (!ids.count(br.from) || !ids.count(br.to)) throw StructuralError(tag + ": unknown endpoint");
    if (br.from == br.to) throw StructuralError(tag + ": self loop");
    if (br.rate_a < 0 || br.rate_b < 0 || br.rate_c < 0) throw StructuralError(tag + ": negative rating");
    if (br.status != 0 && br.r == 0 && br.x == 0) throw StructuralError(tag + ": zero series impedance");
  }
}

bool PowerNetwork::same_data(const PowerNetwork& o) const {
  return base_mva == o.base_mva && buses == o.buses && gens == o.gens && branches == o.branches;
}

std::vector<BusModel> bus_models(const PowerNetwork& net) {
  const double base = net.base_mva;
  std::vector<BusModel> out(net.buses.size());
  std::vector<std::vector<Eigen::Vector3d>> costs(net.buses.size());
  for (int k = 0; k < net.num_buses(); ++k) {
    const Bus& b = net.buses[k];
    BusModel& m = out[k];
    m.pd = b.pd / base;
    m.qd = b.qd / base;
    m.vmin = b.vmin;
    m.vmax = b.vmax;
    m.shunt = Complex(b.gs, b.bs) / base;
  }
  for (const auto& g : net.gens) {
    if (g.status == 0) continue;
    const int k = net.bus_index(g.bus);
    BusModel& m = out[k];
    m.has_gen = true;
    m.pmin += g.pmin / base;
    m.pmax += g.pmax / base;
    m.qmin += g.qmin / base;
    m.qmax += g.qmax / base;
    if (g.cost && g.cost->model == 2) {
      const auto& c = g.cost->coeffs;
      if (c.size() > 3)
        throw StructuralError("generator at bus " + std::to_string(g.bus) + ": cost of degree above 2");
      Eigen::Vector3d abc = Eigen::Vector3d::Zero();
      for (size_t i = 0; i < c.size(); ++i) abc(3 - c.size() + i) = c[i];
      costs[k].push_back(abc);
    }
  }
  for (size_t k = 0; k < costs.size(); ++k) {
    if (costs[k].empty()) continue;
    const double g = static_cast<double>(costs[k].size());
    for (const auto& c : costs[k])
      if ((c - costs[k][0]).norm() > 1e-12)
        throw StructuralError("bus " + std::to_string(net.buses[k].id) +
                              ": generators with different costs on one bus");
    // Identical units share the injection equally.
    const Eigen::Vector3d& c = costs[k][0];
    out[k].cost = Eigen::Vector3d(c(0) / g, c(1), c(2) * g);
  }
  return out;
}

std::vector<LineModel> line_models(const PowerNetwork& net) {
  std::vector<LineModel> out;
  for (const auto& br : net.branches) {
    if (br.status == 0) continue;
    LineModel lm;
    lm.l = net.bus_index(br.from);
    lm.m = net.bus_index(br.to);
    lm.y = 1.0 / Complex(br.r, br.x);
    lm.ygr_l = lm.ygr_m = Complex(0.0, br.b / 2.0);
    const double tap = br.ratio == 0.0 ? 1.0 : br.ratio;
    lm.rho_l = std::polar(tap, br.angle * kDegToRad);
    lm.rho_m = 1.0;
    lm.smax = br.rate_a / net.base_mva;
    out.push_back(lm);
  }
  return out;
}

Eigen::MatrixXcd build_admittance(int n, const std::vector<LineModel>& lines, const std::vector<Complex>& bus_shunts) {
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& ln : lines) {
    if (ln.l < 0 || ln.m < 0 || ln.l >= n || ln.m >= n) throw StructuralError("line endpoint out of range");
    Y(ln.l, ln.l) += (ln.y + ln.ygr_l) / std::norm(ln.rho_l);
    Y(ln.m, ln.m) += (ln.y + ln.ygr_m) / std::norm(ln.rho_m);
    Y(ln.l, ln.m) += -ln.y / (ln.rho_m * std::conj(ln.rho_l));
    Y(ln.m, ln.l) += -ln.y / (ln.rho_l * std::conj(ln.rho_m));
  }
  for (size_t k = 0; k < bus_shunts.size(); ++k) Y(k, k) += bus_shunts[k];
  return Y;
}

Eigen::MatrixXcd build_admittance(const PowerNetwork& net) {
  net.validate();
  std::vector<Complex> sh;
  for (const auto& m : bus_models(net)) sh.push_back(m.shunt);
  return build_admittance(net.num_buses(), line_models(net), sh);
}

Eigen::MatrixXcd injection_matrix(const Eigen::MatrixXcd& Y, int k, bool reactive) {
  const int n = static_cast<int>(Y.rows());
  Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(n, n);
  E(k, k) = 1.0;
  const Eigen::MatrixXcd A = Y.adjoint() * E, B = E * Y;
  return reactive ? Eigen::MatrixXcd((A - B) / Complex(0.0, 2.0)) : Eigen::MatrixXcd((A + B) / 2.0);
}

Eigen::MatrixXcd flow_matrix(int n, const LineModel& ln, bool at_from) {
  const int l = at_from ? ln.l : ln.m;
  const int m = at_from ? ln.m : ln.l;
  const Complex rl = at_from ? ln.rho_l : ln.rho_m;
  const Complex rm = at_from ? ln.rho_m : ln.rho_l;
  const Complex ygr = at_from ? ln.ygr_l : ln.ygr_m;
  const Complex a = (ln.y + ygr) / std::norm(rl);
  const Complex b = -ln.y / (rm * std::conj(rl));
  Eigen::MatrixXcd F = Eigen::MatrixXcd::Zero(n, n);
  F(l, l) = std::conj(a);
  F(m, l) = std::conj(b);
  return F;
}

std::string to_string(OpfObjective o) { return o == OpfObjective::kLoss ? "loss" : "cost"; }

OpfObjective opf_objective_from_string(const std::string& s) {
  if (s == "loss") return OpfObjective::kLoss;
  if (s == "cost") return OpfObjective::kCost;
  throw StructuralError("unknown OPF objective '" + s + "' (expected loss or cost)");
}

ComplexPop build_opf_pop(const PowerNetwork& net, OpfObjective objective, bool include_line_limits) {
  net.validate();
  const int n = net.num_buses();
  const double base = net.base_mva;
  const Eigen::MatrixXcd Y = build_admittance(net);
  const auto buses = bus_models(net);

  ComplexPop p;
  p.n = n;
  p.objective = ComplexPolynomial(n);
  if (objective == OpfObjective::kLoss) {
    p.objective = ComplexPolynomial::hermitian_form(Eigen::MatrixXcd((Y.adjoint() + Y) / 2.0)) * Complex(base);
  } else {
    bool any = false;
    for (int k = 0; k < n; ++k) {
      if (!buses[k].cost) continue;
      any = true;
      const Eigen::Vector3d& c = *buses[k].cost;
      // Generation in MW: base (v^H H_k v + p_k^dem).
      const ComplexPolynomial pg = ComplexPolynomial::hermitian_form(injection_matrix(Y, k, false)) * Complex(base) +
                                   ComplexPolynomial::constant(n, buses[k].pd * base);
      if (c(0) == 0.0) {
        p.objective += pg * Complex(c(1)) + ComplexPolynomial::constant(n, c(2));
      } else {
        if (c(0) < 0) throw StructuralError("negative quadratic cost at bus " + std::to_string(net.buses[k].id));
        p.quadratic_costs.push_back({pg, c(0), c(1), c(2)});
      }
    }
    if (!any) throw StructuralError("cost objective requested but the case has no generator cost data");
  }

  int group = 0;
  for (int k = 0; k < n; ++k) {
    const BusModel& b = buses[k];
    const std::string id = std::to_string(net.buses[k].id);
    const ComplexPolynomial P = ComplexPolynomial::hermitian_form(injection_matrix(Y, k, false));
    const ComplexPolynomial Q = ComplexPolynomial::hermitian_form(injection_matrix(Y, k, true));
    struct Side {
      std::optional<PopConstraint> lower, upper;
    };
    auto sides = [&](const ComplexPolynomial& f, double lo, double hi, const std::string& name) {
      Side s;
      if (!b.has_gen || std::abs(hi - lo) <= 1e-12) {
        s.lower = PopConstraint{f - ComplexPolynomial::constant(n, lo), true, name, base};
        return s;
      }
      if (finite(lo)) s.lower = PopConstraint{f - ComplexPolynomial::constant(n, lo), false, name + "min", base};
      if (finite(hi)) s.upper = PopConstraint{ComplexPolynomial::constant(n, hi) - f, false, name + "max", base};
      return s;
    };
    Side sp = sides(P, b.pmin - b.pd, b.pmax - b.pd, "P" + id);
    Side sq = sides(Q, b.qmin - b.qd, b.qmax - b.qd, "Q" + id);
    auto emit = [&](std::optional<PopConstraint>& a, std::optional<PopConstraint>& c) {
      const bool pair = a && c;
      if (a) {
        if (pair) a->group = group;
        p.constraints.push_back(*a);
      }
      if (c) {
        if (pair) c->group = group;
        p.constraints.push_back(*c);
      }
      if (pair) ++group;
    };
    emit(sp.lower, sq.lower);
    emit(sp.upper, sq.upper);
  }
  for (int k = 0; k < n; ++k) {
    const BusModel& b = buses[k];
    const std::string id = std::to_string(net.buses[k].id);
    const ComplexPolynomial v2 = ComplexPolynomial::abs2(n, k);
    if (b.vmin > 0) p.constraints.push_back({v2 - ComplexPolynomial::constant(n, b.vmin * b.vmin), false, "V" + id + "min"});
    if (finite(b.vmax))
      p.constraints.push_back({ComplexPolynomial::constant(n, b.vmax * b.vmax) - v2, false, "V" + id + "max"});
  }
  if (include_line_limits) {
    for (const auto& ln : line_models(net)) {
      if (ln.smax <= 0) continue;
      for (bool from : {true, false}) {
        const Eigen::MatrixXcd F = flow_matrix(n, ln, from);
        NormConstraint nc;
        nc.parts.push_back(ComplexPolynomial::hermitian_form(Eigen::MatrixXcd((F + F.adjoint()) / 2.0)));
        nc.parts.push_back(ComplexPolynomial::hermitian_form(Eigen::MatrixXcd((F - F.adjoint()) / Complex(0.0, 2.0))));
        nc.bound = ln.smax;
        const int a = net.buses[from ? ln.l : ln.m].id, c = net.buses[from ? ln.m : ln.l].id;
        nc.name = "S" + std::to_string(a) + "-" + std::to_string(c);
        p.norm_constraints.push_back(std::move(nc));
      }
    }
  }
  double r2 = 0.0;
  bool bounded = true;
  for (const auto& b : buses) {
    bounded &= finite(b.vmax);
    r2 += b.vmax * b.vmax;
  }
  if (bounded) p.ball_radius = std::sqrt(r2);
  p.validate();
  return p;
}

Eigen::VectorXd voltage_bounds(const PowerNetwork& net) {
  Eigen::VectorXd v(net.num_buses());
  for (int k = 0; k < net.num_buses(); ++k) v(k) = net.buses[k].vmax;
  return v;
}

PowerNetwork preprocess_low_impedance(const PowerNetwork& net_in, double threshold_pu, MergeReport* report) {
  if (!(threshold_pu > 0)) throw StructuralError("impedance threshold must be positive");
  net_in.validate();
  PowerNetwork net = net_in;
  MergeReport rep;
  std::map<int, std::vector<int>> absorbed;  // survivor id -> merged ids, across passes
  while (true) {
    const int n = net.num_buses();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    bool any = false;
    for (const auto& br : net.branches) {
      if (br.status == 0 || std::abs(Complex(br.r, br.x)) >= threshold_pu) continue;
      int a = find(net.bus_index(br.from)), b = find(net.bus_index(br.to));
      if (a == b) continue;
      // Survivor: lowest bus id.
      if (net.buses[b].id < net.buses[a].id) std::swap(a, b);
      parent[b] = a;
      any = true;
    }
    if (!any) break;

    std::vector<int> root(n);
    for (int k = 0; k < n; ++k) root[k] = find(k);
    std::vector<Bus> buses;
    std::map<int, int> new_index;  // root position -> position in buses
    for (int k = 0; k < n; ++k)
      if (root[k] == k) {
        new_index[k] = static_cast<int>(buses.size());
        buses.push_back(net.buses[k]);
      }
    for (int k = 0; k < n; ++k) {
      if (root[k] == k) continue;
      Bus& s = buses[new_index[root[k]]];
      const Bus& b = net.buses[k];
      s.pd += b.pd;
      s.qd += b.qd;
      s.gs += b.gs;
      s.bs += b.bs;
      s.vmin = std::max(s.vmin, b.vmin);
      s.vmax = std::min(s.vmax, b.vmax);
      s.type = std::max(s.type, b.type);
      auto& list = absorbed[s.id];
      list.push_back(b.id);
      if (auto it = absorbed.find(b.id); it != absorbed.end()) {
        list.insert(list.end(), it->second.begin(), it->second.end());
        absorbed.erase(it);
      }
      if (s.vmin > s.vmax)
        rep.warnings.push_back("bus " + std::to_string(s.id) + ": merged voltage bounds are empty");
    }
    auto survivor_id = [&](int id) { return net.buses[root[net.bus_index(id)]].id; };
    for (auto& g : net.gens) g.bus = survivor_id(g.bus);
    std::vector<Branch> branches;
    for (auto br : net.branches) {
      br.from = survivor_id(br.from);
      br.to = survivor_id(br.to);
      if (br.from == br.to) {
        ++rep.removed_lines;
        continue;
      }
      branches.push_back(br);
    }
    // Combine parallel untapped in-service lines.
    std::vector<Branch> combined;
    std::map<std::pair<int, int>, int> seen;
    for (const auto& br : branches) {
      const bool plain = br.status != 0 && br.ratio == 0.0 && br.angle == 0.0;
      const auto key = std::minmax(br.from, br.to);
      if (plain) {
        auto it = seen.find(key);
        if (it != seen.end()) {
          Branch& c = combined[it->second];
          const Complex y = 1.0 / Complex(c.r, c.x) + 1.0 / Complex(br.r, br.x);
          const Complex z = 1.0 / y;
          c.r = z.real();
          c.x = z.imag();
          c.b += br.b;
          auto rate = [](double a, double b) { return (a == 0 || b == 0) ? 0.0 : a + b; };
          c.rate_a = rate(c.rate_a, br.rate_a);
          c.rate_b = rate(c.rate_b, br.rate_b);
          c.rate_c = rate(c.rate_c, br.rate_c);
          ++rep.combined_parallel;
          continue;
        }
        seen[key] = static_cast<int>(combined.size());
      }
      combined.push_back(br);
    }
    net.buses = std::move(buses);
    net.branches = std::move(combined);
  }
  for (auto& [s, list] : absorbed) {
    std::sort(list.begin(), list.end());
    rep.groups.push_back({s, list});
  }
  if (report) *report = rep;
  return net;
}

double opf_objective(const PowerNetwork& net, const Eigen::VectorXcd& v, OpfObjective objective) {
  const Eigen::MatrixXcd Y = build_admittance(net);
  const Eigen::VectorXcd S = v.cwiseProduct((Y * v).conjugate()) * net.base_mva;
  if (objective == OpfObjective::kLoss) return S.real().sum();
  const auto buses = bus_models(net);
  double cost = 0.0;
  for (int k = 0; k < net.num_buses(); ++k) {
    if (!buses[k].cost) continue;
    const double pg = S(k).real() + net.buses[k].pd;
    const Eigen::Vector3d& c = *buses[k].cost;
    cost += c(0) * pg * pg + c(1) * pg + c(2);
  }
  return cost;
}

bool ViolationReport::feasible(double voltage_tol, double power_tol) const {
  return max_voltage <= voltage_tol && max_power <= power_tol && max_line <= power_tol;
}

bool ViolationReport::certified(double voltage_tol, double power_tol, double gap_tol) const {
  return feasible(voltage_tol, power_tol) && std::abs(gap) <= gap_tol;
}

ViolationReport violation_report(const PowerNetwork& net, const Eigen::VectorXcd& v, double bound,
                                 OpfObjective objective) {
  const int n = net.num_buses();
  if (v.size() != n) throw StructuralError("voltage vector length differs from the bus count");
  const double base = net.base_mva;
  const Eigen::MatrixXcd Y = build_admittance(net);
  const Eigen::VectorXcd S = v.cwiseProduct((Y * v).conjugate()) * base;
  const auto buses = bus_models(net);
  ViolationReport r;
  for (int k = 0; k < n; ++k) {
    const BusModel& b = buses[k];
    BusViolation bv;
    bv.bus = net.buses[k].id;
    bv.p_mw = S(k).real();
    bv.q_mvar = S(k).imag();
    bv.vm = std::abs(v(k));
    auto excess = [](double x, double lo, double hi) { return std::max({0.0, lo - x, x - hi}); };
    const double plo = (b.has_gen ? b.pmin : 0.0) - b.pd, phi = (b.has_gen ? b.pmax : 0.0) - b.pd;
    const double qlo = (b.has_gen ? b.qmin : 0.0) - b.qd, qhi = (b.has_gen ? b.qmax : 0.0) - b.qd;
    bv.p_violation = excess(bv.p_mw, plo * base, phi * base);
    bv.q_violation = excess(bv.q_mvar, qlo * base, qhi * base);
    bv.v_violation = excess(bv.vm, b.vmin, b.vmax);
    r.max_voltage = std::max(r.max_voltage, bv.v_violation);
    r.max_voltage_squared = std::max(r.max_voltage_squared, excess(bv.vm * bv.vm, b.vmin * b.vmin, b.vmax * b.vmax));
    r.max_power = std::max({r.max_power, bv.p_violation, bv.q_violation});
    r.buses.push_back(bv);
  }
  for (const auto& ln : line_models(net)) {
    if (ln.smax <= 0) continue;
    for (bool from : {true, false}) {
      const Complex s = v.dot(flow_matrix(n, ln, from) * v) * base;
      r.max_line = std::max(r.max_line, std::abs(s) - ln.smax * base);
    }
  }
  r.objective = opf_objective(net, v, objective);
  r.bound = bound;
  r.gap = (r.objective - bound) / std::max(1.0, std::abs(bound));
  return r;
}

nlohmann::json to_json(const ViolationReport& r) {
  nlohmann::json j;
  j["max_voltage_violation_pu"] = r.max_voltage;
  j["max_voltage_squared_violation"] = r.max_voltage_squared;
  j["max_power_violation_mva"] = r.max_power;
  j["max_line_violation_mva"] = r.max_line;
  j["objective"] = r.objective;
  j["bound"] = r.bound;
  j["gap"] = r.gap;
  j["feasible"] = r.feasible();
  j["certified"] = r.certified();
  j["buses"] = nlohmann::json::array();
  for (const auto& b : r.buses)
    j["buses"].push_back({{"bus", b.bus},
                          {"p_mw", b.p_mw},
                          {"q_mvar", b.q_mvar},
                          {"vm", b.vm},
                          {"p_violation", b.p_violation},
                          {"q_violation", b.q_violation},
                          {"v_violation", b.v_violation}});
  return j;
}

void write_text(const ViolationReport& r, std::ostream& out) {
  char line[160];
  std::snprintf(line, sizeof line, "%6s %12s %12s %9s %10s %10s %10s\n", "bus", "P [MW]", "Q [MVAr]", "|V|", "dP", "dQ",
                "dV");
  out << line;
  for (const auto& b : r.buses) {
    std::snprintf(line, sizeof line, "%6d %12.4f %12.4f %9.5f %10.4f %10.4f %10.5f\n", b.bus, b.p_mw, b.q_mvar, b.vm,
                  b.p_violation, b.q_violation, b.v_violation);
    out << line;
  }
  std::snprintf(line, sizeof line,
                "max violation: voltage %.5f p.u., power %.4f MVA, line %.4f MVA\n"
                "objective %.6f, bound %.6f, gap %.3e\n",
                r.max_voltage, r.max_power, r.max_line, r.objective, r.bound, r.gap);
  out << line;
}

}  // namespace cpop
