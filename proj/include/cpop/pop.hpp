#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpop/poly.hpp"

namespace cpop {

// g(z) >= 0, or g(z) = 0 when equality is set.
struct PopConstraint {
  ComplexPolynomial g;
  bool equality = false;
  std::string name;
  double unit_scale = 1.0;  // multiplies g for reporting in native units (e.g. MVA)
  int group = -1;           // constraints sharing a group are reported as one complex pair
};

// ||(p_1(z), ..., p_r(z))||_2 <= bound with real-valued p_j.
struct NormConstraint {
  std::vector<ComplexPolynomial> parts;
  double bound = 0.0;
  std::string name;
};

// a p(z)^2 + b p(z) + c added to the objective, p real-valued, a >= 0.
struct QuadraticCost {
  ComplexPolynomial p;
  double a = 0.0, b = 0.0, c = 0.0;
};

// min f(z) s.t. g_i(z) >= 0 (or = 0), plus optional second-order extras.
struct ComplexPop {
  int n = 0;
  ComplexPolynomial objective;
  std::vector<PopConstraint> constraints;
  std::vector<NormConstraint> norm_constraints;
  std::vector<QuadraticCost> quadratic_costs;
  // Known radius R with sum |z_k|^2 <= R^2 on the feasible set, if any.
  std::optional<double> ball_radius;

  void validate() const;
  double objective_value(const Eigen::VectorXcd& z) const;
  // Largest violation over all constraints, in polynomial units.
  double max_violation(const Eigen::VectorXcd& z) const;
  // Objective half-degree.
  int objective_k() const;
  // Minimal relaxation order: max of all half-degrees.
  int min_order() const;
  bool has_second_order_extras() const {
    return !norm_constraints.empty() || !quadratic_costs.empty();
  }
};

nlohmann::json pop_to_json(const ComplexPop& p);
ComplexPop pop_from_json(const nlohmann::json& j);
ComplexPop load_pop(const std::string& path);

}  // namespace cpop
