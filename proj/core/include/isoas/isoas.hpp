#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "isoas/geometry.hpp"
#include "isoas/model.hpp"
#include "isoas/propagation.hpp"

namespace isoas {

struct IsoasConfig {
  Tolerances tol;
  int k_max = 500;
  int i_max = 100;
  int row_cap = 100000;
  bool empty_set_prevention = true;
  bool erosion_prevention = true;

  PropagationConfig propagation() const {
    return PropagationConfig{tol, k_max, row_cap, empty_set_prevention};
  }
};

/// Index into the per-region arrays below.
enum RegionIndex { kNonSat = 0, kUpper = 1, kLower = 2 };

/// Snapshot of one outer iteration i.
struct IterationRecord {
  int i = 0;
  // Q_{i,0}: previous set intersected with the reduced seed.
  std::array<Polyhedron, 3> seeded;
  // Q_{i,inf}: result of propagation in round i.
  std::array<Polyhedron, 3> result;
  std::array<int, 3> seed_rows{};
  std::array<int, 3> bundle_rows{};
  std::array<int, 3> steps{};
  std::array<ConstraintBundle, 3> bundles{
      ConstraintBundle(0, RegionTag::kNonSaturated),
      ConstraintBundle(0, RegionTag::kUpperSaturated),
      ConstraintBundle(0, RegionTag::kLowerSaturated)};
  std::array<int, 2> prevention_dropped{};  // upper, lower
  std::array<int, 2> erosion_dropped{};     // upper, lower
};

struct IsoasResult {
  Polyhedron Q;
  Polyhedron Q_up;
  Polyhedron Q_lo;
  // Index i* of the last propagation round.
  int outer_iterations = 0;
  RegionTriple regions;
  std::vector<IterationRecord> trace;

  const Polyhedron& piece(int index) const {
    return index == kNonSat ? Q : (index == kUpper ? Q_up : Q_lo);
  }
  std::vector<Polyhedron> pieces() const { return {Q, Q_up, Q_lo}; }
};

/// Membership in Q u Q_up u Q_lo.
bool Membership(const IsoasResult& result,
                const Eigen::Ref<const Eigen::VectorXd>& z, double tol = 1e-8);

struct MoasResult {
  Polyhedron O;
  int steps = 0;
  ConstraintBundle bundle{0, RegionTag::kMoas};
};

/// Finitely determined maximal output admissible set of the linear closed
/// loop with input bounds treated as constraints, restricted to the tightened
/// reference band.
MoasResult ComputeMoas(const SaturatedLoop& loop,
                       const OutputConstraints& outc,
                       const IsoasConfig& cfg = {});

/// Drops the rows of a saturated bundle that are already implied, over
/// `sat_region`, by the propagated non-saturated rows (region rows of S
/// excluded). Rows whose LP is infeasible are dropped as well.
ConstraintBundle ErosionFilter(const ConstraintBundle& sat_bundle,
                               const Polyhedron& sat_region,
                               const Generation& nonsat_rows,
                               const Tolerances& tol, int* dropped = nullptr);

/// Propagates in the three saturation regions and shares the newly retained
/// constraints between them until no region receives a nonredundant row.
/// Throws CapExceededError after cfg.i_max outer iterations.
IsoasResult ComputeIsoas(const SaturatedLoop& loop,
                         const OutputConstraints& outc,
                         const IsoasConfig& cfg = {});

}  // namespace isoas
