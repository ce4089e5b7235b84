#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isoas/geometry.hpp"

namespace isoas {

/// x+ = A x + B u,  y = C x + D u  with a single input.
struct Plant {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;  // n x 1
  Eigen::MatrixXd C;
  Eigen::MatrixXd D;  // l x 1

  int n() const { return static_cast<int>(A.rows()); }
  int l() const { return static_cast<int>(C.rows()); }

  // Throws InputError on inconsistent shapes, multiple inputs or B == 0.
  void Validate() const;
};

/// Y = {y | H y <= h} with h > 0.
struct OutputConstraints {
  Eigen::MatrixXd H;
  Eigen::VectorXd h;

  void Validate(int l) const;
};

/// Direction of the equilibrium manifold: x = G_x r, u = G_u r, y = G_y r.
struct EquilibriumBasis {
  Eigen::VectorXd G_x;
  double G_u = 0.0;
  Eigen::VectorXd G_y;
};

/// How the scalar reference is scaled.
enum class ReferenceScaling {
  kInput,  // G_u = 1 when nonzero, otherwise max |G_x| entry = 1
  kState,  // largest-magnitude entry of G_x equals 1
};

/// Linear closed loop under u = G_u r - K (x - G_x r).
struct ClosedLoop {
  Eigen::MatrixXd A_hat;
  Eigen::VectorXd B_hat;
  Eigen::MatrixXd C_hat;
  Eigen::VectorXd D_hat;
};

/// Null space of [A - I, B], normalized per `scaling`. Throws ConfigError when
/// the null space is not one-dimensional.
EquilibriumBasis ComputeEquilibriumBasis(
    const Plant& plant, ReferenceScaling scaling = ReferenceScaling::kInput);

double SpectralRadius(const Eigen::MatrixXd& A);

/// Throws ValidationError when A - B K is not Schur.
ClosedLoop ComputeClosedLoop(const Plant& plant,
                             const Eigen::RowVectorXd& K,
                             const EquilibriumBasis& basis);

/// Plant + gain + saturation, with every derived quantity precomputed.
class SaturatedLoop {
 public:
  static SaturatedLoop Create(Plant plant, Eigen::RowVectorXd K, double u_lo,
                              double u_hi, double eps,
                              const OutputConstraints& outc,
                              ReferenceScaling scaling =
                                  ReferenceScaling::kInput);

  const Plant& plant() const { return plant_; }
  const Eigen::RowVectorXd& K() const { return K_; }
  double u_lo() const { return u_lo_; }
  double u_hi() const { return u_hi_; }
  double eps() const { return eps_; }
  const EquilibriumBasis& basis() const { return basis_; }
  const ClosedLoop& closed() const { return closed_; }
  // Steady-state admissible references (1-D).
  const Polyhedron& R() const { return R_; }
  // (1 - eps) R.
  const Polyhedron& R_tight() const { return R_tight_; }
  int n() const { return plant_.n(); }
  int z_dim() const { return plant_.n() + 1; }

  // Unsaturated control value as a row over z = (x, r):
  // G_u r - K (x - G_x r) = w' z.
  const Eigen::RowVectorXd& control_row() const { return control_row_; }
  double ControlValue(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    return control_row_.dot(z);
  }
  // Interval of the tightened reference set.
  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }

 private:
  SaturatedLoop() = default;

  Plant plant_;
  Eigen::RowVectorXd K_;
  double u_lo_ = 0.0;
  double u_hi_ = 0.0;
  double eps_ = 0.0;
  EquilibriumBasis basis_;
  ClosedLoop closed_;
  Polyhedron R_;
  Polyhedron R_tight_;
  Eigen::RowVectorXd control_row_;
  double r_min_ = 0.0;
  double r_max_ = 0.0;
};

/// Steady-state admissible reference set
/// {r | [G_u; -G_u; H G_y] r <= [u_hi; -u_lo; h]} with zero rows pruned.
Polyhedron ReferenceSet(const EquilibriumBasis& basis, double u_lo,
                        double u_hi, const OutputConstraints& outc);

/// Non-saturated, upper-saturated and lower-saturated regions in z-space, each
/// restricted to r in (1 - eps) R.
struct RegionTriple {
  Polyhedron S;
  Polyhedron S_up;
  Polyhedron S_lo;
};

RegionTriple BuildRegions(const SaturatedLoop& loop);

/// The tightened reference band lifted to z-space: {(x, r) | r in (1-eps)R}.
Polyhedron ReferenceBand(const SaturatedLoop& loop);

struct Diagnostics {
  bool schur = false;
  double spectral_radius = 0.0;
  bool input_interior = false;
  bool output_interior = false;
  int null_space_dim = 0;
  int observability_rank = 0;
  bool observable = false;
  bool authority_upper_applicable = false;
  bool authority_lower_applicable = false;
  double authority_condition = 0.0;
  bool authority_condition_defined = false;

  bool ok() const {
    return schur && input_interior && output_interior && null_space_dim == 1;
  }
  std::vector<std::string> Messages() const;
};

/// Reports the standing assumptions without throwing.
Diagnostics Validate(const Plant& plant, const Eigen::RowVectorXd& K,
                     double u_lo, double u_hi,
                     const OutputConstraints& outc, double eps);

}  // namespace isoas
