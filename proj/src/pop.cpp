#include "cpop/pop.hpp"

#include <cmath>
#include <fstream>

#include "cpop/poly_json.hpp"

namespace cpop {

void ComplexPop::validate() const {
  if (n <= 0) throw StructuralError("problem needs at least one variable");
  auto check = [&](const ComplexPolynomial& p, const std::string& what) {
    if (p.num_vars() != n) throw StructuralError(what + ": variable count differs from problem");
    if (!validate_real_valued(p)) throw StructuralError(what + ": polynomial is not real-valued");
  };
  check(objective, "objective");
  for (size_t i = 0; i < constraints.size(); ++i) {
    check(constraints[i].g, "constraint " + std::to_string(i));
    if (constraints[i].g.is_zero()) throw StructuralError("constraint " + std::to_string(i) + " is zero");
  }
  for (const auto& nc : norm_constraints) {
    if (nc.parts.empty() || nc.bound < 0) throw StructuralError("norm constraint malformed");
    for (const auto& p : nc.parts) check(p, "norm constraint part");
  }
  for (const auto& qc : quadratic_costs) {
    check(qc.p, "quadratic cost");
    if (qc.a < 0) throw StructuralError("quadratic cost with negative curvature");
  }
  if (ball_radius && !(*ball_radius > 0)) throw StructuralError("ball radius must be positive");
}

double ComplexPop::objective_value(const Eigen::VectorXcd& z) const {
  double v = objective.evaluate(z).real();
  for (const auto& qc : quadratic_costs) {
    const double u = qc.p.evaluate(z).real();
    v += qc.a * u * u + qc.b * u + qc.c;
  }
  return v;
}

double ComplexPop::max_violation(const Eigen::VectorXcd& z) const {
  double worst = 0.0;
  for (const auto& c : constraints) {
    const double g = c.g.evaluate(z).real();
    worst = std::max(worst, c.equality ? std::abs(g) : -g);
  }
  for (const auto& nc : norm_constraints) {
    double s = 0.0;
    for (const auto& p : nc.parts) s += std::norm(p.evaluate(z).real());
    worst = std::max(worst, std::sqrt(s) - nc.bound);
  }
  return worst;
}

int ComplexPop::objective_k() const {
  int k = objective.is_zero() ? 0 : degree_info(objective).k;
  for (const auto& qc : quadratic_costs) k = std::max(k, degree_info(qc.p).k);
  return k;
}

int ComplexPop::min_order() const {
  int d = std::max(1, objective_k());
  for (const auto& c : constraints) d = std::max(d, degree_info(c.g).k);
  for (const auto& nc : norm_constraints)
    for (const auto& p : nc.parts) d = std::max(d, degree_info(p).k);
  return d;
}

nlohmann::json pop_to_json(const ComplexPop& p) {
  nlohmann::json j;
  j["n"] = p.n;
  j["objective"] = poly_to_json(p.objective);
  j["constraints"] = nlohmann::json::array();
  for (const auto& c : p.constraints) {
    nlohmann::json cj = {{"poly", poly_to_json(c.g)}, {"type", c.equality ? "eq" : "ineq"}};
    if (!c.name.empty()) cj["name"] = c.name;
    if (c.unit_scale != 1.0) cj["unit_scale"] = c.unit_scale;
    if (c.group >= 0) cj["group"] = c.group;
    j["constraints"].push_back(cj);
  }
  if (!p.norm_constraints.empty()) {
    j["norm_constraints"] = nlohmann::json::array();
    for (const auto& nc : p.norm_constraints) {
      nlohmann::json parts = nlohmann::json::array();
      for (const auto& q : nc.parts) parts.push_back(poly_to_json(q));
      j["norm_constraints"].push_back({{"parts", parts}, {"bound", nc.bound}, {"name", nc.name}});
    }
  }
  if (!p.quadratic_costs.empty()) {
    j["quadratic_costs"] = nlohmann::json::array();
    for (const auto& qc : p.quadratic_costs)
      j["quadratic_costs"].push_back({{"poly", poly_to_json(qc.p)}, {"a", qc.a}, {"b", qc.b}, {"c", qc.c}});
  }
  if (p.ball_radius) j["ball_radius"] = *p.ball_radius;
  return j;
}

ComplexPop pop_from_json(const nlohmann::json& j) {
  ComplexPop p;
  try {
    p.n = j.at("n").get<int>();
    p.objective = poly_from_json(j.at("objective"));
    for (const auto& cj : j.value("constraints", nlohmann::json::array())) {
      PopConstraint c;
      c.g = poly_from_json(cj.at("poly"));
      const std::string type = cj.value("type", "ineq");
      if (type != "eq" && type != "ineq") throw StructuralError("constraint type must be eq or ineq");
      c.equality = type == "eq";
      c.name = cj.value("name", "");
      c.unit_scale = cj.value("unit_scale", 1.0);
      c.group = cj.value("group", -1);
      p.constraints.push_back(std::move(c));
    }
    for (const auto& nj : j.value("norm_constraints", nlohmann::json::array())) {
      NormConstraint nc;
      for (const auto& q : nj.at("parts")) nc.parts.push_back(poly_from_json(q));
      nc.bound = nj.at("bound").get<double>();
      nc.name = nj.value("name", "");
      p.norm_constraints.push_back(std::move(nc));
    }
    for (const auto& qj : j.value("quadratic_costs", nlohmann::json::array())) {
      QuadraticCost qc;
      qc.p = poly_from_json(qj.at("poly"));
      qc.a = qj.value("a", 0.0);
      qc.b = qj.value("b", 0.0);
      qc.c = qj.value("c", 0.0);
      p.quadratic_costs.push_back(std::move(qc));
    }
    if (j.contains("ball_radius")) p.ball_radius = j.at("ball_radius").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(std::string("problem JSON: ") + e.what());
  }
  p.validate();
  return p;
}

ComplexPop load_pop(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(path + ": " + e.what());
  }
  return pop_from_json(j);
}

}  // namespace cpop
