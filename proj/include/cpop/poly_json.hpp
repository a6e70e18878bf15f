#pragma once

#include <json.hpp>

#include "cpop/poly.hpp"

namespace cpop {

// {"n": int, "terms": [{"alpha": [..], "beta": [..], "re": float, "im": float}]}
nlohmann::json poly_to_json(const ComplexPolynomial& p);
ComplexPolynomial poly_from_json(const nlohmann::json& j, bool declare_real_valued = false);

}  // namespace cpop
