#include "cpop/poly_json.hpp"

namespace cpop {

nlohmann::json poly_to_json(const ComplexPolynomial& p) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [e, c] : p.terms())
    terms.push_back({{"alpha", e.alpha}, {"beta", e.beta}, {"re", c.real()}, {"im", c.imag()}});
  return {{"n", p.num_vars()}, {"terms", terms}};
}

ComplexPolynomial poly_from_json(const nlohmann::json& j, bool declare_real_valued) {
  if (!j.is_object() || !j.contains("n") || !j.contains("terms"))
    throw StructuralError("polynomial JSON needs \"n\" and \"terms\"");
  const int n = j.at("n").get<int>();
  if (n < 0) throw StructuralError("polynomial JSON: negative n");
  std::vector<std::pair<ExponentPair, Complex>> terms;
  for (const auto& t : j.at("terms")) {
    Exponent a = t.at("alpha").get<Exponent>();
    Exponent b = t.at("beta").get<Exponent>();
    if (static_cast<int>(a.size()) != n || static_cast<int>(b.size()) != n)
      throw StructuralError("polynomial JSON: exponent length differs from n");
    terms.emplace_back(ExponentPair(a, b), Complex(t.value("re", 0.0), t.value("im", 0.0)));
  }
  return ComplexPolynomial(n, terms, declare_real_valued);
}

}  // namespace cpop
