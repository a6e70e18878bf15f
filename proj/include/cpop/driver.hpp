#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cpop/adapt.hpp"
#include "cpop/opf.hpp"
#include "cpop/shor.hpp"

namespace cpop {

inline constexpr const char* kVersion = "1.0.0";

enum class RunMode { kShorSdp, kSocp, kMoment, kMismatch };
std::string to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);

std::string form_to_string(RelaxForm f);
// complex, real or coupled.
RelaxForm form_from_string(const std::string& s);

struct RunConfig {
  std::string input;  // .m / network .json (OPF) or POP .json
  RunMode mode = RunMode::kMoment;
  RelaxForm form = RelaxForm::kComplex;
  int order = 0;                            // uniform d_i; 0 = smallest admissible
  std::vector<std::pair<int, int>> orders;  // (constraint, d_i), constraints 1-based
  AdaptParams adapt;
  std::optional<bool> sparse;  // default: sparse for mismatch, dense otherwise
  Invariance invariance = Invariance::kNone;
  SphereSlack sphere_slack = SphereSlack::kOff;
  OpfObjective objective = OpfObjective::kCost;
  bool line_limits = true;
  double merge_threshold = 0.0;  // p.u., 0 = no low-impedance merging
  double tol = 1e-8;             // solver feasibility and gap tolerance
  std::uint64_t seed = 1;
  int max_iterations = 8;
  int max_order = 4;
  std::string out;  // result JSON path, empty = none
  std::string log;  // iteration JSON lines path, empty = none

  // Rejects invalid mode/form/order combinations with StructuralError.
  void validate() const;
  nlohmann::json to_json() const;
};

// CPOP_TOL when set and valid, 1e-8 otherwise.
double default_tolerance();

// Parses "i=d,j=e" into (constraint, order) pairs.
std::vector<std::pair<int, int>> parse_orders(const std::string& s);

struct RunOutcome {
  int exit_code = 1;  // 0 certified global, 2 bound only, 1 error
  std::string status;
  std::optional<double> bound;  // absent when the relaxation is infeasible or unbounded
  nlohmann::json result;
  std::string summary;
  double seconds = 0.0;
};

// Never throws: errors become exit code 1 with the message in the summary and result.
RunOutcome run(const RunConfig& config);

struct CompareRow {
  std::string label;
  RunOutcome outcome;
};

// Runs configurations over one input in order; throws StructuralError on mixed inputs.
std::vector<CompareRow> compare(const std::vector<std::pair<std::string, RunConfig>>& configs);
void write_compare_table(const std::vector<CompareRow>& rows, std::ostream& out);
void write_compare_csv(const std::vector<CompareRow>& rows, std::ostream& out);

}  // namespace cpop
