#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cpop/pop.hpp"
#include "cpop/shor.hpp"

namespace cpop {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Malformed case file; the message carries the line and field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Columns follow the widely used bus/gen/branch/gencost tables; powers in MW/MVAr,
// impedances in p.u., angles in degrees.
struct Bus {
  int id = 0;
  int type = 1;
  double pd = 0, qd = 0;  // demand
  double gs = 0, bs = 0;  // shunt at 1 p.u.
  int area = 1;
  double vm = 1, va = 0, base_kv = 0;
  int zone = 1;
  double vmax = 1.1, vmin = 0.9;

  bool operator==(const Bus&) const = default;
};

// Polynomial cost: coeffs highest degree first, in $/h with P in MW.
struct GenCost {
  int model = 2;
  double startup = 0, shutdown = 0;
  std::vector<double> coeffs;

  bool operator==(const GenCost&) const = default;
};

struct Generator {
  int bus = 0;  // bus id
  double pg = 0, qg = 0;
  double qmax = kInf, qmin = -kInf;
  double vg = 1, mbase = 100;
  int status = 1;
  double pmax = kInf, pmin = 0;
  std::optional<GenCost> cost;

  bool operator==(const Generator&) const = default;
};

struct Branch {
  int from = 0, to = 0;  // bus ids
  double r = 0, x = 0, b = 0;
  double rate_a = 0, rate_b = 0, rate_c = 0;  // MVA, 0 = unlimited
  double ratio = 0, angle = 0;                 // tap at the from end, 0 = untapped
  int status = 1;

  bool operator==(const Branch&) const = default;
};

struct PowerNetwork {
  std::string name;
  double base_mva = 100;
  std::vector<Bus> buses;
  std::vector<Generator> gens;
  std::vector<Branch> branches;
  std::vector<std::string> warnings;  // ignored sections or columns found while parsing

  int num_buses() const { return static_cast<int>(buses.size()); }
  // Position of a bus id; throws StructuralError when absent.
  int bus_index(int id) const;
  // v_min <= v_max, valid endpoints, nonnegative ratings, nonzero series impedance.
  void validate() const;
  bool same_data(const PowerNetwork& o) const;
};

// Per-bus view in p.u.: injection limits summed over in-service generators (0 without one)
// and the bus cost a p^2 + b p + c in $/h with p in MW.
struct BusModel {
  double pd = 0, qd = 0;
  double pmin = 0, pmax = 0, qmin = 0, qmax = 0;
  double vmin = 0, vmax = 0;
  Complex shunt = 0;
  bool has_gen = false;
  std::optional<Eigen::Vector3d> cost;  // (a, b, c)
};
std::vector<BusModel> bus_models(const PowerNetwork& net);

// Per-line view: series y, shunt per end, complex ratio per end, rating in p.u.
struct LineModel {
  int l = 0, m = 0;  // bus positions
  Complex y = 0, ygr_l = 0, ygr_m = 0;
  Complex rho_l = 1, rho_m = 1;
  double smax = 0;  // 0 = unlimited
};
std::vector<LineModel> line_models(const PowerNetwork& net);

// Off-diagonal -y/(rho_ml conj(rho_lm)), diagonal sum (y + y^gr)/|rho|^2 plus bus shunts.
Eigen::MatrixXcd build_admittance(const PowerNetwork& net);
Eigen::MatrixXcd build_admittance(int n, const std::vector<LineModel>& lines,
                                  const std::vector<Complex>& bus_shunts = {});

// H_k = (Y^H e_k e_k^T + e_k e_k^T Y) / 2 and Ht_k = (Y^H e_k e_k^T - e_k e_k^T Y) / (2i):
// v^H H_k v and v^H Ht_k v are the active and reactive injections at bus k.
Eigen::MatrixXcd injection_matrix(const Eigen::MatrixXcd& Y, int k, bool reactive);
// F_lm at end l (at_from) or m of a line: v^H F v = v_l conj(i_lm).
Eigen::MatrixXcd flow_matrix(int n, const LineModel& line, bool at_from);

enum class OpfObjective { kLoss, kCost };
std::string to_string(OpfObjective o);
OpfObjective opf_objective_from_string(const std::string& s);

// Constraints per bus in order: P and Q lower bounds (or equalities), then P and Q upper
// bounds, skipping infinite limits; then squared voltage bounds per bus. P/Q pairs on the
// same side share a group and carry unit_scale = baseMVA. Loss and cost are in MW and $/h.
ComplexPop build_opf_pop(const PowerNetwork& net, OpfObjective objective, bool include_line_limits);
// v_max per bus, for the optional moment box constraints.
Eigen::VectorXd voltage_bounds(const PowerNetwork& net);

struct MergeReport {
  struct Group {
    int survivor = 0;  // bus id
    std::vector<int> merged;
  };
  std::vector<Group> groups;
  int removed_lines = 0;
  int combined_parallel = 0;
  std::vector<std::string> warnings;
};

// Coalesces buses joined by lines with |r + i x| below threshold into the lowest-index bus,
// summing demands and shunts, intersecting voltage bounds, moving generators, and combining
// parallel untapped lines. Repeats until no such line remains.
PowerNetwork preprocess_low_impedance(const PowerNetwork& net, double threshold_pu,
                                      MergeReport* report = nullptr);

struct BusViolation {
  int bus = 0;  // id
  double p_mw = 0, q_mvar = 0, vm = 0;
  double p_violation = 0, q_violation = 0;  // MW / MVAr
  double v_violation = 0;                   // p.u. magnitude
};

struct ViolationReport {
  double max_voltage = 0;  // p.u. magnitude
  double max_voltage_squared = 0;
  double max_power = 0;  // MVA
  double max_line = 0;   // MVA
  std::vector<BusViolation> buses;
  double objective = 0;
  double bound = 0;
  double gap = 0;  // (objective - bound) / max(1, |bound|)

  bool feasible(double voltage_tol = 0.005, double power_tol = 1.0) const;
  bool certified(double voltage_tol = 0.005, double power_tol = 1.0, double gap_tol = 5e-4) const;
};

ViolationReport violation_report(const PowerNetwork& net, const Eigen::VectorXcd& v, double bound,
                                 OpfObjective objective = OpfObjective::kCost);

// OPF objective value at v, in MW (loss) or $/h (cost).
double opf_objective(const PowerNetwork& net, const Eigen::VectorXcd& v, OpfObjective objective);

// Case files: the .m table format (mpc.baseMVA, mpc.bus, mpc.gen, mpc.branch, mpc.gencost) or
// the JSON schema of network_to_json. Format chosen by extension.
PowerNetwork parse_case(const std::string& path);
PowerNetwork parse_matpower(std::istream& in, const std::string& name = "case");
void write_matpower(const PowerNetwork& net, std::ostream& out);
nlohmann::json network_to_json(const PowerNetwork& net);
PowerNetwork network_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ViolationReport& r);
void write_text(const ViolationReport& r, std::ostream& out);

}  // namespace cpop
