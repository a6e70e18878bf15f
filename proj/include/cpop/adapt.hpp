#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cpop/chordal.hpp"
#include "cpop/conic.hpp"
#include "cpop/extract.hpp"
#include "cpop/moment.hpp"
#include "cpop/pop.hpp"

namespace cpop {

struct AdaptParams {
  double epsilon = 1.0;   // mismatch tolerance in native units (1 MVA for OPF)
  int h = 2;              // highest mismatches considered per iteration
  int delta_max_min = 2;  // cap on max H - min H

  // Throws StructuralError on epsilon <= 0, h < 1 or delta_max_min < 0.
  void validate() const;
};

struct StitchResult {
  std::vector<Eigen::VectorXcd> u;  // per clique, u u^H closest rank one to y(l)
  std::vector<double> lambda1, lambda2;
  std::vector<double> weights;      // weight of each clique in the z fit
  std::vector<double> theta;        // in [0, 2 pi)
  Eigen::VectorXcd z;
  std::vector<int> zero_blocks;     // cliques whose first-order block vanishes
};

// Rank-one candidate from the first-order moments of every clique: per-clique closest rank
// one matrices, least-squares phase alignment on shared vertices, weighted fit of z.
// Throws StructuralError when a first-order moment is missing.
StitchResult stitch_candidate(const MomentSequence& y, const CliqueDecomposition& dec);

// |L_y(g_i) - g_i(z)| in native units (times unit_scale). Each pair (i, j) in grouping is
// reported as the modulus of the two mismatches, attributed to both.
std::vector<double> compute_mismatches(const MomentSequence& y, const Eigen::VectorXcd& z,
                                       const std::vector<PopConstraint>& constraints,
                                       const std::vector<std::pair<int, int>>& grouping = {});

// Pairs of constraints sharing a group id, in order of first appearance.
std::vector<std::pair<int, int>> constraint_groups(const std::vector<PopConstraint>& constraints);

enum class AdvanceCase { kNoSolution, kHighestBelowMax, kHighestAtMax, kUniform };
std::string to_string(AdvanceCase c);

struct AdvanceResult {
  std::vector<int> orders;
  AdvanceCase which = AdvanceCase::kUniform;
  std::vector<int> selected;  // constraints whose mismatch drove the increment
  bool spread_lift = false;   // minimum-order entries lifted to respect the cap
};

// H(d) -> H(d + 1). covers[i] is the vertex set I_i of constraint i.
AdvanceResult advance_orders(const std::vector<int>& orders, const std::vector<double>& mismatches,
                             const std::vector<std::vector<int>>& covers, const AdaptParams& params,
                             bool solved);

enum class HierarchyStatus { kConverged, kExtracted, kIterationLimit, kOrderLimit };
std::string to_string(HierarchyStatus s);

// Sphere slack added to each relaxation: one slack on the ball of radius R, or one slack per
// clique on the ball of the clique radius.
enum class SphereSlack { kOff, kGlobal, kPerClique };
std::string to_string(SphereSlack s);
SphereSlack sphere_slack_from_string(const std::string& s);

struct HierarchyOptions {
  AdaptParams params;
  bool sparse = true;
  Invariance invariance = Invariance::kNone;
  SolverOptions solver;
  ExtractionOptions extraction;
  bool try_extraction = true;  // dense relaxations only
  std::optional<std::vector<int>> initial_orders;  // default H(0) = (k_1, ..., k_m)
  bool uniform_start = false;  // H(0) = (d_min, ..., d_min) with d_min = max half-degree
  int max_iterations = 8;
  int max_order = 4;
  double feas_tol = 1e-5;  // candidate violation in native units
  double gap_tol = 5e-4;   // |f(z) - bound| <= gap_tol max(1, |bound|)
  // Replaces the default feasibility test of a candidate.
  std::function<bool(const Eigen::VectorXcd&)> candidate_feasible;
  std::optional<Eigen::VectorXd> variable_bounds;
  SphereSlack sphere_slack = SphereSlack::kOff;
  // Radius for the clique with the given vertices; defaults to the problem's ball radius.
  std::function<double(const std::vector<int>&)> clique_radius;
  std::ostream* log = nullptr;  // one JSON object per iteration
};

struct HierarchyIteration {
  int iteration = 0;
  std::vector<int> orders;
  std::vector<int> clique_orders;
  std::vector<std::vector<int>> cliques;
  SolveStatus status = SolveStatus::kOptimal;
  bool solved = false;
  double bound = 0.0;
  long psd_entries = 0;
  std::vector<double> mismatches;
  double max_mismatch = 0.0;
  Eigen::VectorXcd candidate;
  double candidate_objective = 0.0;
  double max_violation = 0.0;  // native units
  bool feasible = false;
  double gap = 0.0;
  std::vector<int> zero_blocks;
  std::string extraction;  // extraction status, empty when not attempted
  AdvanceCase advance = AdvanceCase::kUniform;
  std::vector<int> selected;
  double seconds = 0.0;
};

struct HierarchyResult {
  HierarchyStatus status = HierarchyStatus::kIterationLimit;
  double bound = 0.0;  // best bound over solved iterations
  bool has_bound = false;
  std::optional<Eigen::VectorXcd> candidate;
  std::optional<AtomicMeasure> atoms;
  std::vector<int> orders;  // orders of the last relaxation
  CliqueDecomposition decomposition;
  MomentSequence y;
  std::vector<HierarchyIteration> history;
};

HierarchyResult run_hierarchy(const ComplexPop& p, const HierarchyOptions& opts = {});

// Largest violation over all constraints, scaled by unit_scale.
double native_violation(const ComplexPop& p, const Eigen::VectorXcd& z);

nlohmann::json to_json(const HierarchyIteration& it);
nlohmann::json to_json(const HierarchyResult& r);

}  // namespace cpop
