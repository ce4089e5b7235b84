#pragma once

#include <optional>

#include <Eigen/Dense>

namespace isoas {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

const char* ToString(LpStatus status);

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  // Present iff status == kOptimal.
  std::optional<Eigen::VectorXd> optimizer;
  std::optional<double> value;

  bool optimal() const { return status == LpStatus::kOptimal; }
};

struct LpOptions {
  // Constraint feasibility tolerance, measured on unit-normalized rows.
  double feasibility_tol = 1e-8;
  // Upper bound on simplex pivots per phase; 0 picks a size-based default.
  int max_pivots = 0;
};

// Maximizes c'z subject to H z <= h with z free.
//
// The problem is solved through its dual, min h'y s.t. H'y = c, y >= 0, with a
// dense revised simplex whose basis has only dim(z) rows; the primal optimizer
// is recovered as the simplex multipliers of the optimal dual basis. Rows are
// scaled to unit norm internally. Dantzig pricing is used until a run of
// degenerate pivots, after which Bland's rule guarantees termination.
//
// Throws InputError on dimension mismatch or non-finite data and SolverError
// if the pivot cap is reached or the recovered optimizer is infeasible.
LpResult SolveLp(const Eigen::Ref<const Eigen::VectorXd>& c,
                 const Eigen::Ref<const Eigen::MatrixXd>& H,
                 const Eigen::Ref<const Eigen::VectorXd>& h,
                 const LpOptions& options = {});

// True iff some z satisfies H z <= h + tol on unit-normalized rows.
// Decided with a Farkas-certificate LP: min h'y s.t. H'y = 0, 1'y = 1, y >= 0.
bool IsFeasible(const Eigen::Ref<const Eigen::MatrixXd>& H,
                const Eigen::Ref<const Eigen::VectorXd>& h,
                const LpOptions& options = {});

}  // namespace isoas
