#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isoas/lp.hpp"

namespace isoas {

struct Tolerances {
  double feasibility = 1e-8;  // constraint satisfaction
  double redundancy = 1e-9;   // slack granted when certifying a redundant row
  double geometry = 1e-7;     // vertex merging

  LpOptions lp() const { return LpOptions{feasibility, 0}; }
};

/// H-representation polyhedron {z | H z <= h}.
///
/// Rows must be finite and nonzero; an empty set is encoded by an explicit
/// contradictory pair (see Polyhedron::Empty) rather than a zero row.
class Polyhedron {
 public:
  // The whole space R^dim (no rows).
  explicit Polyhedron(int dim = 0);
  Polyhedron(Eigen::MatrixXd H, Eigen::VectorXd h);

  static Polyhedron FullSpace(int dim) { return Polyhedron(dim); }
  // {z | z_0 <= -1, -z_0 <= -1}.
  static Polyhedron Empty(int dim);
  // Builds from rows that may contain zero normals: vacuous zero rows are
  // dropped and a zero row with a negative offset yields Polyhedron::Empty.
  static Polyhedron FromRowsPruned(const Eigen::MatrixXd& H,
                                   const Eigen::VectorXd& h,
                                   double tol = 1e-12);

  int dim() const { return dim_; }
  int rows() const { return static_cast<int>(h_.size()); }
  const Eigen::MatrixXd& H() const { return H_; }
  const Eigen::VectorXd& h() const { return h_; }

  bool Contains(const Eigen::Ref<const Eigen::VectorXd>& z,
                double tol) const;
  // Largest value of H z - h over the rows (-inf when there are no rows).
  double MaxViolation(const Eigen::Ref<const Eigen::VectorXd>& z) const;

 private:
  Eigen::MatrixXd H_;
  Eigen::VectorXd h_;
  int dim_;
};

/// One block of constraint rows (H_k, h_k).
struct Generation {
  Eigen::MatrixXd H;
  Eigen::VectorXd h;

  int rows() const { return static_cast<int>(h.size()); }
  bool empty() const { return h.size() == 0; }
};

enum class RegionTag { kNonSaturated, kUpperSaturated, kLowerSaturated, kMoas };

const char* ToString(RegionTag tag);

/// Ordered propagation generations accumulated for one region.
class ConstraintBundle {
 public:
  ConstraintBundle(int dim, RegionTag origin) : dim_(dim), origin_(origin) {}

  void Append(Generation gen);
  const std::vector<Generation>& generations() const { return generations_; }
  std::vector<Generation>& mutable_generations() { return generations_; }
  RegionTag origin() const { return origin_; }
  int dim() const { return dim_; }
  int total_rows() const;
  bool empty() const { return total_rows() == 0; }
  Generation Flatten() const;

 private:
  int dim_;
  RegionTag origin_;
  std::vector<Generation> generations_;
};

Generation EmptyGeneration(int dim);
Generation Stack(const std::vector<const Generation*>& parts, int dim);
// Scales each row to unit norm; zero rows are pruned when vacuous and turned
// into a contradictory pair otherwise.
Generation NormalizeRows(const Generation& gen);

/// Maximizes c'z over poly.
LpResult LpSolve(const Eigen::Ref<const Eigen::VectorXd>& c,
                 const Polyhedron& poly, const Tolerances& tol = {});

/// Row-concatenation of two polyhedra in the same space.
Polyhedron Intersect(const Polyhedron& a, const Polyhedron& b);
Polyhedron Intersect(const Polyhedron& a, const Generation& rows);

/// {z | H z <= (1 - eps) h}. Requires every offset strictly positive.
Polyhedron Tighten(const Polyhedron& poly, double eps);

bool IsEmpty(const Polyhedron& poly, const Tolerances& tol = {});

inline bool Contains(const Polyhedron& poly,
                     const Eigen::Ref<const Eigen::VectorXd>& z, double tol) {
  return poly.Contains(z, tol);
}

/// Drops rows of `gen` that are implied by the remaining rows together with
/// `context`. Rows are visited in order and each LP sees only the rows that
/// survived so far. A row is dropped when its LP is infeasible or when
/// max [H]_l z <= [h]_l + tol.redundancy * |[H]_l|; unbounded rows are kept.
Generation RemoveRedundantRows(const Generation& gen, const Polyhedron& context,
                               const Tolerances& tol = {});

/// Nonredundant representation of a polyhedron.
Polyhedron ReduceRepresentation(const Polyhedron& poly,
                                const Tolerances& tol = {});

/// Slice of a polyhedron over z = (x, r) at r = r_fix, returned in x-space.
Polyhedron CrossSection(const Polyhedron& poly, double r_fix);

/// Counter-clockwise vertices of a bounded 2-D polygon. Returns an empty list
/// for an empty set and throws UnboundedError for an unbounded one.
std::vector<Eigen::Vector2d> Vertices2d(const Polyhedron& poly,
                                        const Tolerances& tol = {});

class UnboundedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-coordinate [min, max] over a nonempty bounded polyhedron.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};
Box BoundingBox(const Polyhedron& poly, const Tolerances& tol = {});

}  // namespace isoas
