#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isoas/geometry.hpp"
#include "isoas/model.hpp"

namespace isoas {

/// Clamps u to [u_lo, u_hi].
double Saturate(double u, double u_lo, double u_hi);

/// Saturated closed-loop rollout. Index k runs over 0..length for all three
/// sequences; inputs[k] and outputs[k] belong to states[k].
struct Trajectory {
  std::vector<Eigen::VectorXd> states;
  std::vector<double> inputs;
  std::vector<Eigen::VectorXd> outputs;
  double r = 0.0;
  int length = 0;
};

/// Rolls the saturated loop forward T >= 1 steps from x0 at constant r.
Trajectory Simulate(const SaturatedLoop& loop,
                    const Eigen::Ref<const Eigen::VectorXd>& x0, double r,
                    int T);

enum class OmegaVerdict { kMember, kNonMember, kUndecided };

const char* ToString(OmegaVerdict verdict);

struct OmegaResult {
  OmegaVerdict verdict = OmegaVerdict::kUndecided;
  // Step at which the verdict was reached (T_max when undecided).
  int step = 0;
};

/// Membership in the maximal saturated admissible set by rollout. NonMember
/// on the first output violation beyond `tol`, Member once the pair enters
/// `moas`, Undecided after T_max steps.
OmegaResult OmegaMembership(const SaturatedLoop& loop,
                            const OutputConstraints& outc,
                            const Polyhedron& moas,
                            const Eigen::Ref<const Eigen::VectorXd>& z,
                            int T_max = 1000, double tol = 1e-8);

struct VerifyOptions {
  int n_samples = 10000;
  int T = 500;
  std::uint64_t seed = 1;
  // Membership tolerance for the invariance and output checks.
  double tol = 1e-8;
  // Relative inflation of every sampling box.
  double box_inflation = 0.1;
  // Number of accepted samples that also run OmegaMembership (0 disables).
  int omega_samples = 0;
  int omega_T_max = 1000;
  // Rejection attempts allowed per requested sample.
  int max_attempts_per_sample = 1000;
  // Violating samples kept in the report.
  int max_examples = 20;
};

struct SampleViolation {
  std::string kind;  // "output", "invariance" or "omega"
  Eigen::VectorXd z;
  double margin = 0.0;
  int step = 0;
};

struct VerificationReport {
  VerifyOptions options;
  int samples = 0;
  long long attempts = 0;
  bool sampling_failed = false;
  std::string sampling_message;
  std::vector<int> samples_per_piece;

  int output_violations = 0;
  double worst_output_margin = -std::numeric_limits<double>::infinity();
  int invariance_violations = 0;
  double worst_invariance_margin = -std::numeric_limits<double>::infinity();
  // Samples whose rollout hit the saturation bounds at least once.
  int saturation_events = 0;

  int omega_member = 0;
  int omega_nonmember = 0;
  int omega_undecided = 0;

  std::vector<SampleViolation> examples;

  bool ok() const {
    return !sampling_failed && output_violations == 0 &&
           invariance_violations == 0 && omega_nonmember == 0;
  }
};

/// Monte Carlo certification of a union of polyhedra in z = (x, r).
///
/// Samples are drawn by rejection inside each nonempty piece's bounding box
/// (inflated by options.box_inflation), with pieces picked in proportion to
/// their box volume. For every sample the one-step saturated successor must
/// lie in the union and the T-step saturated rollout must satisfy the output
/// constraints. `moas` feeds the optional OmegaMembership checks.
VerificationReport VerifySet(const std::vector<Polyhedron>& pieces,
                             const SaturatedLoop& loop,
                             const OutputConstraints& outc,
                             const Polyhedron& moas,
                             const VerifyOptions& options = {});

/// Uniform samples from a union of polyhedra with the same scheme as
/// VerifySet. Returns fewer points when the attempt budget runs out.
std::vector<Eigen::VectorXd> SampleUnion(const std::vector<Polyhedron>& pieces,
                                         int n, std::uint64_t seed,
                                         double box_inflation = 0.1,
                                         int max_attempts_per_sample = 1000);

struct LqrResult {
  Eigen::RowVectorXd K;
  Eigen::MatrixXd P;
  int iterations = 0;
  // Infinity norm of the Riccati residual at P.
  double residual = 0.0;
};

/// Infinite-horizon discrete LQR gain by Riccati fixed-point iteration until
/// max |P_{j+1} - P_j| <= 1e-12. Throws SolverError at the iteration cap or
/// when A - B K is not Schur.
LqrResult LqrGain(const Plant& plant, const Eigen::MatrixXd& Q, double R,
                  int max_iterations = 100000);

double RiccatiResidual(const Plant& plant, const Eigen::MatrixXd& Q, double R,
                       const Eigen::MatrixXd& P);

}  // namespace isoas
