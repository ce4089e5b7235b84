#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "isoas/geometry.hpp"
#include "isoas/model.hpp"

namespace isoas {

struct PropagationConfig {
  Tolerances tol;
  int k_max = 500;
  int row_cap = 100000;
  // Row elimination at k = 1 of every saturated propagation. Disabling it is
  // only meant for reproducing the empty-set failure mode.
  bool empty_set_prevention = true;
};

/// Saturated-region equilibrium data for one saturation side.
struct ControlAuthority {
  bool applicable = false;
  // (I - A)^-1 B u_sat; absent when I - A is singular.
  std::optional<Eigen::VectorXd> x_bar;
  // 1 + K (I - A)^-1 B; meaningful only when x_bar is present.
  double condition_value = 0.0;
  // Extra seed row over z = (x, r), present iff applicable:
  //   upper:  -K x <= -(1 - eps/2) K x_bar
  //   lower:   K x <=  (1 - eps/2) K x_bar
  std::optional<Eigen::RowVectorXd> row;
  double offset = 0.0;
};

struct ControlAuthorityPair {
  ControlAuthority upper;
  ControlAuthority lower;
};

ControlAuthorityPair ComputeControlAuthority(const Plant& plant,
                                             const Eigen::RowVectorXd& K,
                                             double u_hi, double u_lo,
                                             double eps);

/// z+ = M z + m.
struct AffineStep {
  Eigen::MatrixXd M;
  Eigen::VectorXd m;

  // Pulls the rows back through one step: (H M, h - H m).
  Generation PullBack(const Generation& gen) const;
};

AffineStep NonSaturatedStep(const SaturatedLoop& loop);
// Dynamics with the input clamped at u_sat (u_hi or u_lo).
AffineStep SaturatedStep(const SaturatedLoop& loop, double u_sat);

/// Output constraints on the linear closed loop at k = 0: H [C_hat D_hat].
Generation NonSaturatedSeed(const SaturatedLoop& loop,
                            const OutputConstraints& outc);
/// [H C, 0] z <= h - H D u_hi, plus the authority row when applicable.
Generation UpperSeed(const SaturatedLoop& loop, const OutputConstraints& outc,
                     const ControlAuthority& auth);
Generation LowerSeed(const SaturatedLoop& loop, const OutputConstraints& outc,
                     const ControlAuthority& auth);

struct StepRecord {
  int k = 0;
  int raw_rows = 0;   // rows of H_k before reduction
  int kept_rows = 0;  // rows retained
};

struct PropagationResult {
  Polyhedron Q;
  // Retained generations H_0, H_1, ... (region rows excluded). Generation k
  // of the bundle is H_k after reduction.
  ConstraintBundle bundle;
  int steps = 0;
  std::vector<StepRecord> trace;
  // Rows of H_1 removed by empty-set prevention.
  int prevention_dropped = 0;
};

/// Constraint propagation inside one region under fixed affine dynamics.
///
/// The seed is row-normalized and pulled back one step at a time; only its
/// rows that are nonredundant over `region` are retained as generation 0, but
/// H_1 is computed from the whole seed. Every later generation is reduced
/// against the region, all retained generations and its own other rows and
/// the loop ends when a generation empties. With `prevent_empty` set,
/// the rows of H_1 whose one-step constraint is implied by their own two-step
/// constraint are removed and H_2 is recomputed from the reduced H_1.
///
/// Throws CapExceededError past cfg.k_max steps or cfg.row_cap rows.
PropagationResult Propagate(const Polyhedron& region, const Generation& seed,
                            const AffineStep& step, RegionTag tag,
                            bool prevent_empty, const PropagationConfig& cfg);

PropagationResult PropagateNonSaturated(const Polyhedron& region,
                                        const Generation& seed,
                                        const SaturatedLoop& loop,
                                        const PropagationConfig& cfg);
PropagationResult PropagateUpper(const Polyhedron& region,
                                 const Generation& seed,
                                 const SaturatedLoop& loop,
                                 const PropagationConfig& cfg);
PropagationResult PropagateLower(const Polyhedron& region,
                                 const Generation& seed,
                                 const SaturatedLoop& loop,
                                 const PropagationConfig& cfg);

/// For each row l of gen1 solves
///   max [H1]_l z  s.t.  [H2]_l z <= [h2]_l,  H0 z <= h0,  z in region
/// and drops row l when the optimum is <= [h1]_l (or the LP is infeasible).
/// gen2 must be gen1 pulled back one step, row for row.
Generation EmptySetPrevention(const Generation& gen1, const Generation& gen2,
                              const Generation& gen0,
                              const Polyhedron& region, const Tolerances& tol,
                              int* dropped = nullptr);

}  // namespace isoas
