#include "cpop/driver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cpop/linalg.hpp"
#include "cpop/moment.hpp"

namespace cpop {

namespace {

bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

nlohmann::json complex_json(const Eigen::VectorXcd& z) {
  nlohmann::json j = nlohmann::json::array();
  for (int k = 0; k < z.size(); ++k) j.push_back({z(k).real(), z(k).imag()});
  return j;
}

std::string complex_text(const Eigen::VectorXcd& z) {
  std::string s;
  for (int k = 0; k < z.size(); ++k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%.6f%+.6fi", k ? ", " : "", z(k).real(), z(k).imag());
    s += buf;
  }
  return "(" + s + ")";
}

struct Problem {
  ComplexPop pop;
  std::optional<PowerNetwork> net;
  nlohmann::json info;
};

Problem load_problem(const RunConfig& c) {
  Problem pr;
  bool network = ends_with(c.input, ".m");
  nlohmann::json j;
  if (!network) {
    if (!ends_with(c.input, ".json")) throw ParseError(c.input + ": unsupported input format (expected .m or .json)");
    std::ifstream in(c.input);
    if (!in) throw ParseError("cannot read " + c.input);
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(c.input + ": " + e.what());
    }
    network = j.is_object() && j.contains("bus");
  }
  if (network) {
    PowerNetwork net = ends_with(c.input, ".m") ? parse_case(c.input) : network_from_json(j);
    pr.info["kind"] = "opf";
    pr.info["warnings"] = net.warnings;
    if (c.merge_threshold > 0) {
      MergeReport rep;
      net = preprocess_low_impedance(net, c.merge_threshold, &rep);
      nlohmann::json groups = nlohmann::json::array();
      for (const auto& g : rep.groups) groups.push_back({{"survivor", g.survivor}, {"merged", g.merged}});
      pr.info["merge"] = {{"groups", groups},
                          {"removed_lines", rep.removed_lines},
                          {"combined_parallel", rep.combined_parallel},
                          {"warnings", rep.warnings}};
    }
    pr.info["buses"] = net.num_buses();
    pr.info["lines"] = net.branches.size();
    pr.pop = build_opf_pop(net, c.objective, c.line_limits);
    pr.net = std::move(net);
  } else {
    pr.pop = pop_from_json(j);
    pr.info["kind"] = "pop";
  }
  pr.info["variables"] = pr.pop.n;
  pr.info["constraints"] = pr.pop.constraints.size();
  return pr;
}

std::vector<int> initial_orders(const RunConfig& c, const ComplexPop& p) {
  const int m = static_cast<int>(p.constraints.size());
  const int base = c.order > 0 ? c.order : std::max(1, p.min_order());
  std::vector<int> H(m);
  for (int i = 0; i < m; ++i) H[i] = std::max(base, degree_info(p.constraints[i].g).k);
  for (const auto& [i, d] : c.orders) {
    if (i < 1 || i > m) throw StructuralError("--orders: constraint " + std::to_string(i) + " out of range 1.." + std::to_string(m));
    if (d < std::max(1, degree_info(p.constraints[i - 1].g).k))
      throw StructuralError("--orders: order " + std::to_string(d) + " below the half-degree of constraint " +
                            std::to_string(i));
    H[i - 1] = d;
  }
  return H;
}

// Z = z z^H from X = (x; y)(x; y)^T with z = x + i y.
Eigen::MatrixXcd from_real_lift(const Eigen::MatrixXd& X, int n) {
  const Eigen::MatrixXd A = X.topLeftCorner(n, n) + X.bottomRightCorner(n, n);
  const Eigen::MatrixXd B = X.bottomLeftCorner(n, n) - X.topRightCorner(n, n);
  Eigen::MatrixXcd Z(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) Z(i, k) = Complex(A(i, k), B(i, k));
  return Z;
}

std::string solve_status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kPrimalInfeasible: return "infeasible";
    case SolveStatus::kDualInfeasible: return "unbounded";
    case SolveStatus::kNumericalLimit: return "numerical_limit";
  }
  return "numerical_limit";
}

struct Assessment {
  bool certified = false;
  nlohmann::json json;
  std::string text;
};

// Feasibility and bound gap of a candidate, in OPF units when a network is present.
Assessment assess(const Problem& pr, const RunConfig& c, const Eigen::VectorXcd& z, double bound) {
  Assessment a;
  if (pr.net) {
    const ViolationReport r = violation_report(*pr.net, z, bound, c.objective);
    a.certified = r.certified();
    a.json = to_json(r);
    std::ostringstream os;
    write_text(r, os);
    a.text = os.str();
  } else {
    const double viol = native_violation(pr.pop, z);
    const double obj = pr.pop.objective_value(z);
    const double gap = (obj - bound) / std::max(1.0, std::abs(bound));
    a.certified = viol <= 1e-5 && std::abs(gap) <= 5e-4;
    a.json = {{"max_violation", viol}, {"objective", obj}, {"gap", gap}, {"feasible", viol <= 1e-5}};
    a.text = "objective at candidate " + num(obj) + ", max violation " + num(viol) + ", gap " + num(gap) + "\n";
  }
  return a;
}

void run_shor(const Problem& pr, const RunConfig& c, RunOutcome& o) {
  const QcqpC q = qcqp_from_pop(pr.pop);
  const bool sparse = c.sparse.value_or(false);
  SolverOptions so;
  so.feas_tol = so.gap_tol = c.tol;
  ShorRelaxation rel;
  std::optional<CliqueDecomposition> dec;
  if (c.mode == RunMode::kSocp) {
    rel = build_socp(q, c.form);
  } else if (c.form == RelaxForm::kComplex) {
    if (sparse) {
      dec = prepare_decomposition(pr.pop, std::vector<int>(pr.pop.constraints.size(), 1), true, 1);
      rel = build_sdp_c(q, dec->cliques);
    } else {
      rel = build_sdp_c(q);
    }
  } else if (c.form == RelaxForm::kReal) {
    rel = build_sdp_r(q);
  } else {
    rel = build_csdp_r(q);
  }
  const SolveResult s = solve_program(rel.program, so);
  o.result["solver"] = {{"status", solve_status_name(s.status)},
                        {"iterations", s.iterations},
                        {"primal_value", s.primal_value},
                        {"dual_value", s.dual_value}};
  if (s.status != SolveStatus::kOptimal) {
    o.status = solve_status_name(s.status);
    o.exit_code = 2;
    return;
  }
  o.bound = s.primal_value;
  o.status = "bound_only";
  o.exit_code = 2;
  if (c.mode == RunMode::kSocp) return;  // the cone relaxation carries no full matrix
  Eigen::MatrixXcd Z = c.form == RelaxForm::kComplex ? rel.complex_matrix(s.x)
                                                      : from_real_lift(rel.real_matrix(s.x), q.n);
  if (dec) Z = psd_complete(Z, *dec);
  RankOneApprox r1 = nearest_rank1(Z);
  Eigen::VectorXcd z = r1.u;
  normalize_global_phase(z);
  const Assessment a = assess(pr, c, z, *o.bound);
  o.result["candidate"] = complex_json(z);
  o.result["rank_ratio"] = r1.lambda1 > 0 ? r1.lambda2 / r1.lambda1 : 0.0;
  o.result["assessment"] = a.json;
  o.summary += a.text;
  o.summary += "candidate: " + complex_text(z) + "\n";
  if (a.certified) {
    o.status = "certified";
    o.exit_code = 0;
  }
}

void run_moment(const Problem& pr, const RunConfig& c, RunOutcome& o) {
  const ComplexPop& p = pr.pop;
  HierarchyOptions h;
  h.params = c.adapt;
  h.invariance = c.invariance;
  h.solver.feas_tol = h.solver.gap_tol = c.tol;
  h.extraction.seed = static_cast<unsigned>(c.seed);
  h.sphere_slack = c.sphere_slack;
  h.max_order = c.max_order;
  if (c.mode == RunMode::kMoment) {
    h.sparse = c.sparse.value_or(false);
    h.max_iterations = 1;
    h.initial_orders = initial_orders(c, p);
  } else {
    h.sparse = c.sparse.value_or(true);
    h.max_iterations = c.max_iterations;
    if (c.order > 0 || !c.orders.empty()) h.initial_orders = initial_orders(c, p);
  }
  if (pr.net) {
    const PowerNetwork& net = *pr.net;
    const OpfObjective obj = c.objective;
    h.variable_bounds = voltage_bounds(net);
    h.candidate_feasible = [&net, obj](const Eigen::VectorXcd& z) {
      return violation_report(net, z, 0.0, obj).feasible();
    };
    const Eigen::VectorXd vmax = voltage_bounds(net);
    h.clique_radius = [vmax](const std::vector<int>& clique) {
      double s = 0.0;
      for (int k : clique)
        if (k < vmax.size()) s += vmax(k) * vmax(k);
      return std::sqrt(s);
    };
  }
  std::ofstream log;
  if (!c.log.empty()) {
    log.open(c.log);
    if (!log) throw ParseError("cannot write " + c.log);
    h.log = &log;
  }
  const HierarchyResult r = run_hierarchy(p, h);
  nlohmann::json hj = to_json(r);
  o.result["hierarchy"] = hj;
  if (r.has_bound) o.bound = r.bound;
  const bool certified = r.status == HierarchyStatus::kConverged || r.status == HierarchyStatus::kExtracted;
  if (certified) {
    o.status = "certified";
    o.exit_code = 0;
  } else if (r.has_bound) {
    o.status = "bound_only";
    o.exit_code = 2;
  } else {
    o.status = r.history.empty() ? "numerical_limit" : solve_status_name(r.history.back().status);
    o.exit_code = 2;
  }
  o.summary += "hierarchy: " + to_string(r.status) + " after " + std::to_string(r.history.size()) + " iteration(s)\n";
  for (const auto& it : r.history) {
    std::string orders;
    for (int d : it.orders) orders += std::to_string(d);
    o.summary += "  iteration " + std::to_string(it.iteration) + ": " + solve_status_name(it.status) +
                 (it.solved ? " bound " + num(it.bound) + " max mismatch " + num(it.max_mismatch) : "") +
                 " orders " + orders + "\n";
  }
  if (r.atoms) {
    o.result["atoms"] = to_json(*r.atoms);
    o.summary += "atoms: " + std::to_string(r.atoms->size()) + "\n";
    for (const auto& a : r.atoms->atoms) o.summary += "  " + complex_text(a) + "\n";
  }
  std::optional<Eigen::VectorXcd> z = r.candidate;
  if (!z && !r.history.empty() && r.history.back().solved) z = r.history.back().candidate;
  if (z && r.has_bound) {
    const Assessment a = assess(pr, c, *z, r.bound);
    o.result["candidate"] = complex_json(*z);
    o.result["assessment"] = a.json;
    o.summary += a.text;
    o.summary += "candidate: " + complex_text(*z) + "\n";
  }
}

}  // namespace

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::kShorSdp: return "shor-sdp";
    case RunMode::kSocp: return "socp";
    case RunMode::kMoment: return "moment";
    case RunMode::kMismatch: return "mismatch";
  }
  return "moment";
}

RunMode run_mode_from_string(const std::string& s) {
  if (s == "shor-sdp") return RunMode::kShorSdp;
  if (s == "socp") return RunMode::kSocp;
  if (s == "moment") return RunMode::kMoment;
  if (s == "mismatch") return RunMode::kMismatch;
  throw StructuralError("unknown mode '" + s + "' (expected shor-sdp, socp, moment or mismatch)");
}

std::string form_to_string(RelaxForm f) {
  switch (f) {
    case RelaxForm::kComplex: return "complex";
    case RelaxForm::kReal: return "real";
    case RelaxForm::kRealCoupled: return "coupled";
  }
  return "complex";
}

RelaxForm form_from_string(const std::string& s) {
  if (s == "complex") return RelaxForm::kComplex;
  if (s == "real") return RelaxForm::kReal;
  if (s == "coupled") return RelaxForm::kRealCoupled;
  throw StructuralError("unknown form '" + s + "' (expected complex, real or coupled)");
}

void RunConfig::validate() const {
  if (input.empty()) throw StructuralError("no input file");
  const bool shor = mode == RunMode::kShorSdp || mode == RunMode::kSocp;
  if (!shor && form != RelaxForm::kComplex) throw StructuralError("--form applies to shor-sdp and socp only");
  if (shor && (order > 0 || !orders.empty())) throw StructuralError("orders apply to moment and mismatch modes only");
  if (shor && sphere_slack != SphereSlack::kOff) throw StructuralError("--sphere-slack applies to moment modes only");
  if (shor && invariance != Invariance::kNone) throw StructuralError("--invariance applies to moment modes only");
  if (mode == RunMode::kSocp && sparse.value_or(false)) throw StructuralError("socp has no sparse variant");
  if (sparse.value_or(false) && mode == RunMode::kShorSdp && form != RelaxForm::kComplex)
    throw StructuralError("sparse shor-sdp is available in complex form only");
  if (order < 0) throw StructuralError("--order must be nonnegative");
  if (!(tol > 0)) throw StructuralError("--tol must be positive");
  if (merge_threshold < 0) throw StructuralError("merge threshold must be nonnegative");
  if (max_iterations < 1 || max_order < 1) throw StructuralError("iteration and order limits must be positive");
  adapt.validate();
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json ord = nlohmann::json::array();
  for (const auto& [i, d] : orders) ord.push_back({i, d});
  return {{"input", input},
          {"mode", to_string(mode)},
          {"form", form_to_string(form)},
          {"order", order},
          {"orders", ord},
          {"adapt", {{"epsilon", adapt.epsilon}, {"h", adapt.h}, {"spread", adapt.delta_max_min}}},
          {"sparse", sparse ? nlohmann::json(*sparse) : nlohmann::json(nullptr)},
          {"invariance", to_string(invariance)},
          {"sphere_slack", to_string(sphere_slack)},
          {"objective", to_string(objective)},
          {"line_limits", line_limits},
          {"merge_threshold", merge_threshold},
          {"tol", tol},
          {"seed", seed},
          {"max_iterations", max_iterations},
          {"max_order", max_order}};
}

double default_tolerance() {
  const char* env = std::getenv("CPOP_TOL");
  if (!env) return 1e-8;
  char* end = nullptr;
  const double v = std::strtod(env, &end);
  return (end != env && *end == '\0' && v > 0 && std::isfinite(v)) ? v : 1e-8;
}

std::vector<std::pair<int, int>> parse_orders(const std::string& s) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    try {
      if (eq == std::string::npos) throw std::invalid_argument("missing '='");
      size_t a = 0, b = 0;
      const int i = std::stoi(item.substr(0, eq), &a);
      const int d = std::stoi(item.substr(eq + 1), &b);
      if (a != eq || b != item.size() - eq - 1) throw std::invalid_argument("trailing characters");
      out.push_back({i, d});
    } catch (const std::exception&) {
      throw StructuralError("--orders: malformed entry '" + item + "' (expected i=d)");
    }
  }
  return out;
}

RunOutcome run(const RunConfig& c) {
  RunOutcome o;
  const auto t0 = std::chrono::steady_clock::now();
  o.result["provenance"] = {{"tool", "cpop"}, {"version", kVersion}, {"config", c.to_json()}};
  o.summary = "cpop " + std::string(kVersion) + " mode=" + to_string(c.mode) + " input=" + c.input + "\n";
  try {
    c.validate();
    const Problem pr = load_problem(c);
    o.result["input"] = pr.info;
    if (pr.net)
      for (const auto& w : pr.net->warnings) o.summary += "warning: " + w + "\n";
    if (c.mode == RunMode::kShorSdp || c.mode == RunMode::kSocp) {
      o.summary += "relaxation: " + to_string(c.mode) + " (" + form_to_string(c.form) + ")\n";
      run_shor(pr, c, o);
    } else {
      run_moment(pr, c, o);
    }
  } catch (const std::exception& e) {
    o.exit_code = 1;
    o.status = "error";
    o.bound.reset();
    o.result["error"] = e.what();
    o.summary += std::string("error: ") + e.what() + "\n";
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.result["status"] = o.status;
  o.result["exit_code"] = o.exit_code;
  o.result["bound"] = o.bound ? nlohmann::json(*o.bound) : nlohmann::json(nullptr);
  o.result["timings"] = {{"total_seconds", o.seconds}};
  o.summary += "status: " + o.status + "\n";
  if (o.bound) o.summary += "bound: " + num(*o.bound) + "\n";
  if (!c.out.empty()) {
    std::ofstream out(c.out);
    if (out) {
      out << o.result.dump(2) << '\n';
    } else if (o.exit_code != 1) {
      o.exit_code = 1;
      o.status = "error";
      o.summary += "error: cannot write " + c.out + "\n";
    }
  }
  return o;
}

std::vector<CompareRow> compare(const std::vector<std::pair<std::string, RunConfig>>& configs) {
  if (configs.size() < 2) throw StructuralError("compare needs at least two configurations");
  for (const auto& [label, c] : configs)
    if (c.input != configs.front().second.input) throw StructuralError("compare: configurations use different inputs");
  std::vector<CompareRow> rows;
  for (const auto& [label, c] : configs) rows.push_back({label, run(c)});
  return rows;
}

void write_compare_table(const std::vector<CompareRow>& rows, std::ostream& out) {
  size_t w = 5;
  for (const auto& r : rows) w = std::max(w, r.label.size());
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %16s  %-16s  %4s  %9s\n", static_cast<int>(w), "label", "bound", "status",
                "exit", "seconds");
  out << line;
  for (const auto& r : rows) {
    const std::string b = r.outcome.bound ? num(*r.outcome.bound) : "-";
    std::snprintf(line, sizeof line, "%-*s  %16s  %-16s  %4d  %9.3f\n", static_cast<int>(w), r.label.c_str(), b.c_str(),
                  r.outcome.status.c_str(), r.outcome.exit_code, r.outcome.seconds);
    out << line;
  }
}

void write_compare_csv(const std::vector<CompareRow>& rows, std::ostream& out) {
  out << "label,mode,form,bound,status,exit_code,seconds\n";
  for (const auto& r : rows) {
    const auto& cfg = r.outcome.result["provenance"]["config"];
    std::string label = r.label;
    if (label.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char ch : label) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      label = q + "\"";
    }
    out << label << ',' << cfg["mode"].get<std::string>() << ',' << cfg["form"].get<std::string>() << ','
        << (r.outcome.bound ? num(*r.outcome.bound) : "") << ',' << r.outcome.status << ',' << r.outcome.exit_code
        << ',' << num(r.outcome.seconds) << '\n';
  }
}

}  // namespace cpop
