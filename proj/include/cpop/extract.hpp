#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cpop/moment.hpp"
#include "cpop/pop.hpp"

namespace cpop {

// sum_j w_j delta_{z(j)}
struct AtomicMeasure {
  std::vector<Eigen::VectorXcd> atoms;
  std::vector<double> weights;

  int size() const { return static_cast<int>(atoms.size()); }
  double total_weight() const;
  double min_pairwise_distance() const;
};

// y_{alpha,beta} = sum_j w_j conj(z(j))^alpha z(j)^beta for |alpha|, |beta| <= d.
MomentSequence moments_from_atoms(const AtomicMeasure& m, int d);

struct ExtractionOptions {
  double rank_tol = 1e-6;  // eigenvalues below rank_tol * largest count as zero
  double psd_tol = 1e-6;   // PSD checks accept eigenvalues >= -psd_tol * max(1, norm)
  double commute_tol = 1e-5;
  double cluster_tol = 1e-6;
  unsigned seed = 1;  // random combination for the joint diagonalization
};

struct ExtractionReport {
  int d = 0;
  int d_K = 0;
  int rank_d = 0;
  int rank_d_minus_dK = 0;
  bool moment_psd = false;                // Point 1, moment matrix
  std::vector<double> localizing_min_eig;  // Point 1, scaled by max(1, norm)
  bool localizing_psd = false;
  bool flatness = false;                  // Point 2
  bool commuting_ok = false;              // Point 3 (or its univariate form)
  double commuting_min_eig = 0.0;
  bool rank_one = false;                  // Points 2 and 3 skipped
  bool ball_constraint = false;           // hypothesis on K present
  std::vector<int> expected_zero_atoms;   // rank M_d(y) - rank M_{d-d_K}(g_i y)
  std::vector<std::string> warnings;

  bool passed() const { return moment_psd && localizing_psd && (rank_one || (flatness && commuting_ok)); }
};

ExtractionReport check_conditions(const MomentSequence& y, int d, int d_K,
                                  const std::vector<PopConstraint>& constraints,
                                  const ExtractionOptions& opts = {});

enum class ExtractionStatus { kExtracted, kConditionsFailed, kExtractionFailed };
std::string to_string(ExtractionStatus s);

struct ExtractionResult {
  ExtractionStatus status = ExtractionStatus::kConditionsFailed;
  ExtractionReport report;
  AtomicMeasure measure;
  double commutator_residual = 0.0;  // relative to the largest shift norm
  double offdiag_residual = 0.0;     // after joint diagonalization, relative
  int jacobi_sweeps = 0;
};

// Atoms of a flat moment sequence; the number of atoms is rank M_d(y). Does not check
// the conditions (see check_conditions).
ExtractionResult extract_atoms(const MomentSequence& y, int d, int d_K, const ExtractionOptions& opts = {});

// check_conditions then extract_atoms; tries t = d, d - 1, ..., d_min and keeps the first
// truncation that passes.
ExtractionResult extract_solution(const MomentSequence& y, int d, int d_min, int d_K,
                                  const std::vector<PopConstraint>& constraints,
                                  const ExtractionOptions& opts = {});

// d_K = max_i k_i.
int constraint_degree(const ComplexPop& p);

// Joint diagonalization of a commuting family of normal matrices: unitary Q with Q^H A_k Q
// nearly diagonal. Starts from the eigenvectors of a random Hermitian combination and
// refines with complex Jacobi sweeps.
struct JointDiagonalization {
  Eigen::MatrixXcd Q;
  double offdiag = 0.0;  // sqrt(sum ||off(Q^H A_k Q)||^2) / sqrt(sum ||A_k||^2)
  int sweeps = 0;
};
JointDiagonalization joint_diagonalize(const std::vector<Eigen::MatrixXcd>& family, unsigned seed,
                                       int max_sweeps = 50);

struct AtomCertificate {
  Eigen::VectorXcd z;
  double weight = 0.0;
  double objective = 0.0;
  double max_violation = 0.0;
  std::string violated;  // name of the worst violated constraint, empty when feasible
  bool feasible = false;
  bool optimal = false;  // |f(z) - bound| <= tol (1 + |bound|)
  double kkt_stationarity = -1.0;   // |grad f - sum sigma_i grad g_i|, -1 without certificate
  double kkt_complementarity = -1.0;
};

struct CertificationReport {
  double bound = 0.0;
  std::vector<AtomCertificate> atoms;
  std::vector<int> zero_atoms;  // atoms on the zero set of each constraint
  bool zero_counts_match = true;
  bool certified = false;  // every atom feasible and optimal
};

CertificationReport certify(const ComplexPop& p, double bound, const AtomicMeasure& m,
                            const SosCertificate* sos = nullptr, double tol = 1e-4,
                            const ExtractionReport* report = nullptr);

nlohmann::json to_json(const AtomicMeasure& m);
nlohmann::json to_json(const ExtractionReport& r);
nlohmann::json to_json(const ExtractionResult& r);
nlohmann::json to_json(const CertificationReport& r);

}  // namespace cpop
