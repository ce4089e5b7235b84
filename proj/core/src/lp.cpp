#include "isoas/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "isoas/errors.hpp"

namespace isoas {

const char* ToString(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "Optimal";
    case LpStatus::kInfeasible:
      return "Infeasible";
    case LpStatus::kUnbounded:
      return "Unbounded";
  }
  return "Unknown";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class PhaseOutcome { kOptimal, kUnbounded };

struct StandardFormSolution {
  LpStatus status = LpStatus::kInfeasible;
  double objective = 0.0;
  // Simplex multipliers of the equality rows, in the caller's row signs.
  VectorXd multipliers;
};

// Dense revised simplex for  min cost'y  s.t.  A y = b, y >= 0.
//
// Intended for problems with very few equality rows (the dual of a small-
// dimensional LP), so the basis inverse is rebuilt from scratch after every
// pivot instead of being updated.
class RevisedSimplex {
 public:
  RevisedSimplex(MatrixXd A, VectorXd b, VectorXd cost, int max_pivots)
      : A_(std::move(A)),
        b_(std::move(b)),
        cost_(std::move(cost)),
        rows_(static_cast<int>(A_.rows())),
        cols_(static_cast<int>(A_.cols())),
        sign_(VectorXd::Ones(rows_)),
        max_pivots_(max_pivots > 0 ? max_pivots
                                   : 50 * (cols_ + rows_) + 1000) {
    for (int i = 0; i < rows_; ++i) {
      if (b_(i) < 0) {
        sign_(i) = -1.0;
        A_.row(i) *= -1.0;
        b_(i) *= -1.0;
      }
    }
    const double cost_scale = std::max(1.0, cost_.lpNorm<Eigen::Infinity>());
    const double b_scale = std::max(1.0, b_.lpNorm<Eigen::Infinity>());
    opt_tol_ = 1e-11 * cost_scale;
    phase1_tol_ = 1e-9 * b_scale;
  }

  StandardFormSolution Solve() {
    StandardFormSolution out;
    basis_.resize(rows_);
    is_basic_.assign(cols_ + rows_, false);
    for (int i = 0; i < rows_; ++i) {
      basis_[i] = cols_ + i;
      is_basic_[cols_ + i] = true;
    }
    RefreshBasis();

    // Phase one: drive the artificial columns to zero.
    VectorXd phase1_cost = VectorXd::Zero(cols_ + rows_);
    phase1_cost.tail(rows_).setOnes();
    if (RunPhase(phase1_cost) == PhaseOutcome::kUnbounded) {
      throw SolverError("simplex: phase one reported unbounded");
    }
    double infeasibility = 0.0;
    for (int i = 0; i < rows_; ++i) {
      if (basis_[i] >= cols_) infeasibility += x_basic_(i);
    }
    if (infeasibility > phase1_tol_) {
      out.status = LpStatus::kInfeasible;
      return out;
    }
    DriveOutArtificials();

    VectorXd phase2_cost = VectorXd::Zero(cols_ + rows_);
    phase2_cost.head(cols_) = cost_;
    if (RunPhase(phase2_cost) == PhaseOutcome::kUnbounded) {
      out.status = LpStatus::kUnbounded;
      return out;
    }
    VectorXd cb(rows_);
    for (int i = 0; i < rows_; ++i) cb(i) = phase2_cost(basis_[i]);
    VectorXd pi = basis_inverse_.transpose() * cb;
    out.status = LpStatus::kOptimal;
    out.objective = cb.dot(x_basic_);
    out.multipliers = pi.cwiseProduct(sign_);
    return out;
  }

 private:
  VectorXd Column(int j) const {
    if (j < cols_) return A_.col(j);
    VectorXd e = VectorXd::Zero(rows_);
    e(j - cols_) = 1.0;
    return e;
  }

  void RefreshBasis() {
    MatrixXd basis_matrix(rows_, rows_);
    for (int i = 0; i < rows_; ++i) basis_matrix.col(i) = Column(basis_[i]);
    Eigen::FullPivLU<MatrixXd> lu(basis_matrix);
    if (!lu.isInvertible()) {
      throw SolverError("simplex: basis matrix became singular");
    }
    basis_inverse_ = lu.inverse();
    x_basic_ = basis_inverse_ * b_;
    for (int i = 0; i < rows_; ++i) {
      if (x_basic_(i) < 0 && x_basic_(i) > -1e-12) x_basic_(i) = 0.0;
    }
  }

  void Pivot(int leaving_row, int entering) {
    is_basic_[basis_[leaving_row]] = false;
    basis_[leaving_row] = entering;
    is_basic_[entering] = true;
    RefreshBasis();
    if (++pivots_ > max_pivots_) {
      std::ostringstream msg;
      msg << "simplex: pivot cap " << max_pivots_ << " reached (" << rows_
          << " rows, " << cols_ << " columns, bland=" << bland_ << ")";
      throw SolverError(msg.str());
    }
  }

  // Artificial columns never re-enter the basis.
  PhaseOutcome RunPhase(const VectorXd& cost) {
    int degenerate_run = 0;
    for (;;) {
      VectorXd cb(rows_);
      for (int i = 0; i < rows_; ++i) cb(i) = cost(basis_[i]);
      const VectorXd pi = basis_inverse_.transpose() * cb;
      const VectorXd reduced =
          cost.head(cols_) - A_.transpose() * pi;

      int entering = -1;
      double best = -opt_tol_;
      for (int j = 0; j < cols_; ++j) {
        if (is_basic_[j] || reduced(j) >= -opt_tol_) continue;
        if (bland_) {
          entering = j;
          break;
        }
        if (reduced(j) < best) {
          best = reduced(j);
          entering = j;
        }
      }
      if (entering < 0) return PhaseOutcome::kOptimal;

      const VectorXd direction = basis_inverse_ * A_.col(entering);
      const double piv_tol =
          1e-9 * std::max(1.0, direction.lpNorm<Eigen::Infinity>());
      int leaving = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows_; ++i) {
        if (direction(i) <= piv_tol) continue;
        const double ratio = x_basic_(i) / direction(i);
        if (leaving < 0 || ratio < best_ratio - 1e-12) {
          leaving = i;
          best_ratio = ratio;
        } else if (ratio <= best_ratio + 1e-12) {
          const bool prefer = bland_ ? basis_[i] < basis_[leaving]
                                     : direction(i) > direction(leaving);
          if (prefer) {
            leaving = i;
            best_ratio = std::min(best_ratio, ratio);
          }
        }
      }
      if (leaving < 0) return PhaseOutcome::kUnbounded;

      if (best_ratio <= 1e-14) {
        if (++degenerate_run > 50) bland_ = true;
      } else {
        degenerate_run = 0;
      }
      Pivot(leaving, entering);
    }
  }

  void DriveOutArtificials() {
    for (int i = 0; i < rows_; ++i) {
      if (basis_[i] < cols_) continue;
      const Eigen::RowVectorXd row = basis_inverse_.row(i) * A_;
      int best = -1;
      double best_mag = 1e-9 * std::max(1.0, row.lpNorm<Eigen::Infinity>());
      for (int j = 0; j < cols_; ++j) {
        if (is_basic_[j]) continue;
        if (std::abs(row(j)) > best_mag) {
          best_mag = std::abs(row(j));
          best = j;
        }
      }
      // No candidate: the equality row is linearly dependent on the others
      // and its artificial stays basic at zero.
      if (best >= 0) Pivot(i, best);
    }
  }

  MatrixXd A_;
  VectorXd b_;
  VectorXd cost_;
  int rows_;
  int cols_;
  VectorXd sign_;
  int max_pivots_;
  double opt_tol_ = 0.0;
  double phase1_tol_ = 0.0;

  std::vector<int> basis_;
  std::vector<bool> is_basic_;
  MatrixXd basis_inverse_;
  VectorXd x_basic_;
  int pivots_ = 0;
  bool bland_ = false;
};

void CheckFinite(const Eigen::Ref<const MatrixXd>& H,
                 const Eigen::Ref<const VectorXd>& h) {
  if (!H.allFinite() || !h.allFinite()) {
    throw InputError("LP data contains NaN or Inf");
  }
}

// Unit-normalizes rows and strips zero rows. Returns false if a zero row has a
// negative offset, i.e. the constraint system is trivially infeasible.
bool NormalizeRows(const Eigen::Ref<const MatrixXd>& H,
                   const Eigen::Ref<const VectorXd>& h, double tol,
                   MatrixXd* Hn, VectorXd* hn) {
  std::vector<int> keep;
  keep.reserve(H.rows());
  VectorXd norms = H.rowwise().norm();
  for (int i = 0; i < H.rows(); ++i) {
    if (norms(i) > 1e-14) {
      keep.push_back(i);
    } else if (h(i) < -tol) {
      return false;
    }
  }
  Hn->resize(static_cast<Eigen::Index>(keep.size()), H.cols());
  hn->resize(static_cast<Eigen::Index>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) {
    Hn->row(k) = H.row(keep[k]) / norms(keep[k]);
    (*hn)(k) = h(keep[k]) / norms(keep[k]);
  }
  return true;
}

bool IsFeasibleNormalized(const MatrixXd& Hn, const VectorXd& hn,
                          const LpOptions& options) {
  const int m = static_cast<int>(Hn.rows());
  const int d = static_cast<int>(Hn.cols());
  if (m == 0) return true;
  MatrixXd A(d + 1, m);
  A.topRows(d) = Hn.transpose();
  A.row(d).setOnes();
  VectorXd b = VectorXd::Zero(d + 1);
  b(d) = 1.0;
  RevisedSimplex simplex(std::move(A), std::move(b), hn, options.max_pivots);
  const StandardFormSolution sol = simplex.Solve();
  switch (sol.status) {
    case LpStatus::kInfeasible:
      // No Farkas certificate exists.
      return true;
    case LpStatus::kOptimal:
      return sol.objective >= -options.feasibility_tol;
    case LpStatus::kUnbounded:
      break;
  }
  throw SolverError("feasibility LP reported unbounded over a simplex");
}

}  // namespace

bool IsFeasible(const Eigen::Ref<const MatrixXd>& H,
                const Eigen::Ref<const VectorXd>& h,
                const LpOptions& options) {
  if (H.rows() != h.size()) {
    throw InputError("IsFeasible: H and h row counts differ");
  }
  CheckFinite(H, h);
  MatrixXd Hn;
  VectorXd hn;
  if (!NormalizeRows(H, h, options.feasibility_tol, &Hn, &hn)) return false;
  return IsFeasibleNormalized(Hn, hn, options);
}

LpResult SolveLp(const Eigen::Ref<const VectorXd>& c,
                 const Eigen::Ref<const MatrixXd>& H,
                 const Eigen::Ref<const VectorXd>& h,
                 const LpOptions& options) {
  if (H.rows() != h.size()) {
    throw InputError("SolveLp: H and h row counts differ");
  }
  if (H.cols() != c.size()) {
    throw InputError("SolveLp: objective dimension does not match H");
  }
  CheckFinite(H, h);
  if (!c.allFinite()) throw InputError("SolveLp: objective is not finite");

  LpResult result;
  MatrixXd Hn;
  VectorXd hn;
  if (!NormalizeRows(H, h, options.feasibility_tol, &Hn, &hn)) {
    result.status = LpStatus::kInfeasible;
    return result;
  }

  // Dual: min hn'y  s.t.  Hn'y = c, y >= 0.
  RevisedSimplex simplex(Hn.transpose(), c, hn, options.max_pivots);
  const StandardFormSolution dual = simplex.Solve();
  switch (dual.status) {
    case LpStatus::kUnbounded:
      result.status = LpStatus::kInfeasible;
      return result;
    case LpStatus::kInfeasible:
      result.status = IsFeasibleNormalized(Hn, hn, options)
                          ? LpStatus::kUnbounded
                          : LpStatus::kInfeasible;
      return result;
    case LpStatus::kOptimal:
      break;
  }

  const VectorXd& z = dual.multipliers;
  if (Hn.rows() > 0) {
    const double violation = (Hn * z - hn).maxCoeff();
    const double scale = std::max(1.0, z.lpNorm<Eigen::Infinity>());
    if (violation > 1e-6 * scale) {
      std::ostringstream msg;
      msg << "SolveLp: recovered optimizer violates constraints by "
          << violation << " (" << Hn.rows() << " rows, dim " << Hn.cols()
          << ")";
      throw SolverError(msg.str());
    }
  }
  result.status = LpStatus::kOptimal;
  result.optimizer = z;
  result.value = c.dot(z);
  return result;
}

}  // namespace isoas
