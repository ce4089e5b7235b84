#include "isoas/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "isoas/errors.hpp"

namespace isoas {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kZeroRowNorm = 1e-14;

double Cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a,
             const Eigen::Vector2d& b) {
  return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
}

}  // namespace

Polyhedron::Polyhedron(int dim)
    : H_(MatrixXd::Zero(0, dim)), h_(VectorXd::Zero(0)), dim_(dim) {
  if (dim < 0) throw InputError("Polyhedron: negative dimension");
}

Polyhedron::Polyhedron(MatrixXd H, VectorXd h)
    : H_(std::move(H)), h_(std::move(h)), dim_(static_cast<int>(H_.cols())) {
  if (H_.rows() != h_.size()) {
    throw InputError("Polyhedron: H has " + std::to_string(H_.rows()) +
                     " rows but h has " + std::to_string(h_.size()));
  }
  if (!H_.allFinite() || !h_.allFinite()) {
    throw InputError("Polyhedron: non-finite entry");
  }
  for (int i = 0; i < H_.rows(); ++i) {
    if (H_.row(i).norm() <= kZeroRowNorm) {
      throw InputError("Polyhedron: row " + std::to_string(i) +
                       " has a zero normal");
    }
  }
}

Polyhedron Polyhedron::Empty(int dim) {
  if (dim < 1) throw InputError("Polyhedron::Empty needs dim >= 1");
  MatrixXd H = MatrixXd::Zero(2, dim);
  H(0, 0) = 1.0;
  H(1, 0) = -1.0;
  return Polyhedron(H, VectorXd::Constant(2, -1.0));
}

Polyhedron Polyhedron::FromRowsPruned(const MatrixXd& H, const VectorXd& h,
                                      double tol) {
  if (H.rows() != h.size()) {
    throw InputError("Polyhedron: H and h row counts differ");
  }
  std::vector<int> keep;
  for (int i = 0; i < H.rows(); ++i) {
    if (H.row(i).norm() > kZeroRowNorm) {
      keep.push_back(i);
    } else if (h(i) < -tol) {
      return Empty(static_cast<int>(H.cols()));
    }
  }
  MatrixXd Hk(static_cast<Eigen::Index>(keep.size()), H.cols());
  VectorXd hk(static_cast<Eigen::Index>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) {
    Hk.row(k) = H.row(keep[k]);
    hk(k) = h(keep[k]);
  }
  return Polyhedron(std::move(Hk), std::move(hk));
}

bool Polyhedron::Contains(const Eigen::Ref<const VectorXd>& z,
                          double tol) const {
  if (z.size() != dim_) {
    throw InputError("Polyhedron::Contains: point dimension mismatch");
  }
  if (rows() == 0) return true;
  return ((H_ * z - h_).array() <= tol).all();
}

double Polyhedron::MaxViolation(const Eigen::Ref<const VectorXd>& z) const {
  if (z.size() != dim_) {
    throw InputError("Polyhedron::MaxViolation: point dimension mismatch");
  }
  if (rows() == 0) return -std::numeric_limits<double>::infinity();
  return (H_ * z - h_).maxCoeff();
}

const char* ToString(RegionTag tag) {
  switch (tag) {
    case RegionTag::kNonSaturated:
      return "Q";
    case RegionTag::kUpperSaturated:
      return "Q_up";
    case RegionTag::kLowerSaturated:
      return "Q_lo";
    case RegionTag::kMoas:
      return "moas";
  }
  return "?";
}

void ConstraintBundle::Append(Generation gen) {
  if (gen.H.rows() != gen.h.size()) {
    throw InputError("ConstraintBundle: generation row/offset mismatch");
  }
  if (gen.rows() > 0 && gen.H.cols() != dim_) {
    throw InputError("ConstraintBundle: generation dimension mismatch");
  }
  generations_.push_back(std::move(gen));
}

int ConstraintBundle::total_rows() const {
  int total = 0;
  for (const auto& g : generations_) total += g.rows();
  return total;
}

Generation ConstraintBundle::Flatten() const {
  std::vector<const Generation*> parts;
  for (const auto& g : generations_) parts.push_back(&g);
  return Stack(parts, dim_);
}

Generation EmptyGeneration(int dim) {
  return Generation{MatrixXd::Zero(0, dim), VectorXd::Zero(0)};
}

Generation Stack(const std::vector<const Generation*>& parts, int dim) {
  int total = 0;
  for (const Generation* g : parts) total += g->rows();
  Generation out{MatrixXd(total, dim), VectorXd(total)};
  int at = 0;
  for (const Generation* g : parts) {
    if (g->rows() == 0) continue;
    if (g->H.cols() != dim) throw InputError("Stack: dimension mismatch");
    out.H.middleRows(at, g->rows()) = g->H;
    out.h.segment(at, g->rows()) = g->h;
    at += g->rows();
  }
  return out;
}

Generation NormalizeRows(const Generation& gen) {
  const int dim = static_cast<int>(gen.H.cols());
  std::vector<int> keep;
  bool infeasible = false;
  for (int i = 0; i < gen.rows(); ++i) {
    if (gen.H.row(i).norm() > kZeroRowNorm) {
      keep.push_back(i);
    } else if (gen.h(i) < 0) {
      infeasible = true;
    }
  }
  if (infeasible) {
    const Polyhedron empty = Polyhedron::Empty(dim);
    return Generation{empty.H(), empty.h()};
  }
  Generation out{MatrixXd(keep.size(), dim), VectorXd(keep.size())};
  for (size_t k = 0; k < keep.size(); ++k) {
    const double norm = gen.H.row(keep[k]).norm();
    out.H.row(k) = gen.H.row(keep[k]) / norm;
    out.h(k) = gen.h(keep[k]) / norm;
  }
  return out;
}

LpResult LpSolve(const Eigen::Ref<const VectorXd>& c, const Polyhedron& poly,
                 const Tolerances& tol) {
  if (c.size() != poly.dim()) {
    throw InputError("LpSolve: objective has dimension " +
                     std::to_string(c.size()) + ", polyhedron has " +
                     std::to_string(poly.dim()));
  }
  return SolveLp(c, poly.H(), poly.h(), tol.lp());
}

Polyhedron Intersect(const Polyhedron& a, const Polyhedron& b) {
  if (a.dim() != b.dim()) {
    throw InputError("Intersect: dimension mismatch");
  }
  MatrixXd H(a.rows() + b.rows(), a.dim());
  VectorXd h(a.rows() + b.rows());
  H << a.H(), b.H();
  h << a.h(), b.h();
  return Polyhedron(std::move(H), std::move(h));
}

Polyhedron Intersect(const Polyhedron& a, const Generation& rows) {
  if (rows.rows() == 0) return a;
  return Intersect(a, Polyhedron(rows.H, rows.h));
}

Polyhedron Tighten(const Polyhedron& poly, double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) {
    throw PreconditionError("Tighten: eps must lie in [0, 1)");
  }
  if (poly.rows() > 0 && poly.h().minCoeff() <= 0.0) {
    throw PreconditionError(
        "Tighten: origin must be interior (all offsets strictly positive)");
  }
  return Polyhedron(poly.H(), (1.0 - eps) * poly.h());
}

bool IsEmpty(const Polyhedron& poly, const Tolerances& tol) {
  return !IsFeasible(poly.H(), poly.h(), tol.lp());
}

Generation RemoveRedundantRows(const Generation& gen,
                               const Polyhedron& context,
                               const Tolerances& tol) {
  const int m = gen.rows();
  if (m == 0) return gen;
  const int dim = static_cast<int>(gen.H.cols());
  if (context.dim() != dim) {
    throw InputError("RemoveRedundantRows: context dimension mismatch");
  }
  const int c = context.rows();

  std::vector<bool> alive(m, true);
  MatrixXd H(m - 1 + c, dim);
  VectorXd h(m - 1 + c);
  for (int l = 0; l < m; ++l) {
    int at = 0;
    for (int j = 0; j < m; ++j) {
      if (j == l || !alive[j]) continue;
      H.row(at) = gen.H.row(j);
      h(at) = gen.h(j);
      ++at;
    }
    if (c > 0) {
      H.middleRows(at, c) = context.H();
      h.segment(at, c) = context.h();
    }
    at += c;
    const VectorXd objective = gen.H.row(l).transpose();
    const LpResult res =
        SolveLp(objective, H.topRows(at), h.head(at), tol.lp());
    switch (res.status) {
      case LpStatus::kInfeasible:
        alive[l] = false;
        break;
      case LpStatus::kUnbounded:
        break;
      case LpStatus::kOptimal:
        if (*res.value <=
            gen.h(l) + tol.redundancy * gen.H.row(l).norm()) {
          alive[l] = false;
        }
        break;
    }
  }

  const int kept = static_cast<int>(std::count(alive.begin(), alive.end(), true));
  Generation out{MatrixXd(kept, dim), VectorXd(kept)};
  int at = 0;
  for (int j = 0; j < m; ++j) {
    if (!alive[j]) continue;
    out.H.row(at) = gen.H.row(j);
    out.h(at) = gen.h(j);
    ++at;
  }
  return out;
}

Polyhedron ReduceRepresentation(const Polyhedron& poly,
                                const Tolerances& tol) {
  if (poly.rows() == 0) return poly;
  if (IsEmpty(poly, tol)) return Polyhedron::Empty(poly.dim());
  Generation reduced = RemoveRedundantRows(Generation{poly.H(), poly.h()},
                                           Polyhedron(poly.dim()), tol);
  return Polyhedron(std::move(reduced.H), std::move(reduced.h));
}

Polyhedron CrossSection(const Polyhedron& poly, double r_fix) {
  if (poly.dim() < 2) {
    throw InputError("CrossSection: polyhedron must live in (x, r) space");
  }
  const int n = poly.dim() - 1;
  if (poly.rows() == 0) return Polyhedron(n);
  const MatrixXd Hx = poly.H().leftCols(n);
  const VectorXd hx = poly.h() - poly.H().col(n) * r_fix;
  return Polyhedron::FromRowsPruned(Hx, hx);
}

std::vector<Eigen::Vector2d> Vertices2d(const Polyhedron& poly,
                                        const Tolerances& tol) {
  if (poly.dim() != 2) throw InputError("Vertices2d: polygon must be 2-D");
  if (poly.rows() == 0) throw UnboundedError("Vertices2d: full plane");
  if (IsEmpty(poly, tol)) return {};
  for (int axis = 0; axis < 2; ++axis) {
    for (double sign : {1.0, -1.0}) {
      VectorXd c = VectorXd::Zero(2);
      c(axis) = sign;
      if (LpSolve(c, poly, tol).status == LpStatus::kUnbounded) {
        throw UnboundedError("Vertices2d: polygon is unbounded");
      }
    }
  }

  const Generation rows = RemoveRedundantRows(
      NormalizeRows(Generation{poly.H(), poly.h()}), Polyhedron(2), tol);
  const double scale = std::max(1.0, rows.h.cwiseAbs().maxCoeff());

  std::vector<Eigen::Vector2d> candidates;
  for (int i = 0; i < rows.rows(); ++i) {
    for (int j = i + 1; j < rows.rows(); ++j) {
      Eigen::Matrix2d M;
      M << rows.H.row(i), rows.H.row(j);
      if (std::abs(M.determinant()) < 1e-12) continue;
      const Eigen::Vector2d p =
          M.partialPivLu().solve(Eigen::Vector2d(rows.h(i), rows.h(j)));
      if (((rows.H * p - rows.h).array() <= tol.geometry * scale).all()) {
        candidates.push_back(p);
      }
    }
  }
  if (candidates.empty()) {
    // Degenerate (lower-dimensional) set: fall back to LP extreme points.
    for (int k = 0; k < 8; ++k) {
      const double angle = k * M_PI / 4.0;
      const VectorXd c = Eigen::Vector2d(std::cos(angle), std::sin(angle));
      const LpResult res = LpSolve(c, poly, tol);
      if (res.optimal()) candidates.push_back(res.optimizer->head<2>());
    }
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
              return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
            });
  // Andrew's monotone chain; collinear and coincident points are discarded.
  std::vector<Eigen::Vector2d> hull(2 * candidates.size() + 1);
  size_t k = 0;
  const double eps = 1e-14 * scale * scale;
  for (const auto& p : candidates) {
    while (k >= 2 && Cross(hull[k - 2], hull[k - 1], p) <= eps) --k;
    hull[k++] = p;
  }
  for (size_t i = candidates.size() - 1, lower = k + 1; i-- > 0;) {
    const auto& p = candidates[i];
    while (k >= lower && Cross(hull[k - 2], hull[k - 1], p) <= eps) --k;
    hull[k++] = p;
  }
  hull.resize(k > 1 ? k - 1 : k);

  std::vector<Eigen::Vector2d> merged;
  for (const auto& p : hull) {
    if (!merged.empty() && (p - merged.back()).norm() <= tol.geometry) continue;
    merged.push_back(p);
  }
  while (merged.size() > 1 &&
         (merged.front() - merged.back()).norm() <= tol.geometry) {
    merged.pop_back();
  }
  return merged;
}

Box BoundingBox(const Polyhedron& poly, const Tolerances& tol) {
  const int d = poly.dim();
  Box box{VectorXd(d), VectorXd(d)};
  for (int axis = 0; axis < d; ++axis) {
    for (double sign : {1.0, -1.0}) {
      VectorXd c = VectorXd::Zero(d);
      c(axis) = sign;
      const LpResult res = LpSolve(c, poly, tol);
      if (res.status == LpStatus::kUnbounded) {
        throw UnboundedError("BoundingBox: polyhedron is unbounded");
      }
      if (res.status == LpStatus::kInfeasible) {
        throw PreconditionError("BoundingBox: polyhedron is empty");
      }
      if (sign > 0) {
        box.hi(axis) = *res.value;
      } else {
        box.lo(axis) = -*res.value;
      }
    }
  }
  return box;
}

}  // namespace isoas
