#include "isoas/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "isoas/errors.hpp"
#include "isoas/propagation.hpp"

namespace isoas {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace {

int NullSpaceDim(const MatrixXd& M, MatrixXd* V) {
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullV);
  const VectorXd& s = svd.singularValues();
  const double tol = 1e-10 * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
  int rank = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > tol) ++rank;
  }
  if (V != nullptr) *V = svd.matrixV();
  return static_cast<int>(M.cols()) - rank;
}

MatrixXd NullSpaceMatrix(const Plant& plant) {
  const int n = plant.n();
  MatrixXd M(n, n + 1);
  M << plant.A - MatrixXd::Identity(n, n), plant.B;
  return M;
}

int ObservabilityRank(const Plant& plant) {
  const int n = plant.n();
  const int l = plant.l();
  MatrixXd O(n * l, n);
  MatrixXd block = plant.C;
  for (int i = 0; i < n; ++i) {
    O.middleRows(i * l, l) = block;
    block = block * plant.A;
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(O);
  qr.setThreshold(1e-10);
  return static_cast<int>(qr.rank());
}

}  // namespace

void Plant::Validate() const {
  const int n_ = n();
  if (n_ == 0 || A.cols() != n_) throw InputError("A must be square, n >= 1");
  if (B.rows() != n_) throw InputError("B must have n rows");
  if (B.cols() != 1) {
    throw InputError("only single-input plants are supported (B is n x 1)");
  }
  if (C.cols() != n_ || C.rows() == 0) throw InputError("C must be l x n");
  if (D.rows() != C.rows() || D.cols() != 1) throw InputError("D must be l x 1");
  if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite()) {
    throw InputError("plant matrices contain NaN or Inf");
  }
  if (B.norm() == 0.0) throw InputError("B must be nonzero");
}

void OutputConstraints::Validate(int l) const {
  if (H.cols() != l) throw InputError("output constraint H must have l columns");
  if (H.rows() != h.size() || h.size() == 0) {
    throw InputError("output constraint H and h row counts differ");
  }
  if (!H.allFinite() || !h.allFinite()) {
    throw InputError("output constraints contain NaN or Inf");
  }
  if (h.minCoeff() <= 0.0) {
    throw InputError("output constraints must contain the origin in their "
                     "interior (h > 0)");
  }
}

EquilibriumBasis ComputeEquilibriumBasis(const Plant& plant,
                                         ReferenceScaling scaling) {
  plant.Validate();
  const int n = plant.n();
  MatrixXd V;
  const int dim = NullSpaceDim(NullSpaceMatrix(plant), &V);
  if (dim != 1) {
    throw ConfigError("unsupported plant: null space of [A - I, B] has "
                      "dimension " + std::to_string(dim) + " (expected 1)");
  }
  VectorXd v = V.col(n);
  const double scale = v.cwiseAbs().maxCoeff();
  for (int i = 0; i <= n; ++i) {
    if (std::abs(v(i)) <= 1e-13 * scale) v(i) = 0.0;
  }

  Eigen::Index arg = 0;
  v.head(n).cwiseAbs().maxCoeff(&arg);
  double divisor = v(arg);
  if (scaling == ReferenceScaling::kInput && v(n) != 0.0) divisor = v(n);
  v /= divisor;

  EquilibriumBasis basis;
  basis.G_u = v(n);
  basis.G_x = v.head(n);
  // Re-solve G_x from the defining equation for full precision when the
  // steady input is nonzero and A - I is invertible.
  const MatrixXd I_minus_A = MatrixXd::Identity(n, n) - plant.A;
  Eigen::FullPivLU<MatrixXd> lu(I_minus_A);
  if (basis.G_u != 0.0 && lu.isInvertible()) {
    basis.G_x = lu.solve(plant.B * basis.G_u);
  }
  basis.G_y = plant.C * basis.G_x + plant.D * basis.G_u;
  return basis;
}

double SpectralRadius(const MatrixXd& A) {
  Eigen::EigenSolver<MatrixXd> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

ClosedLoop ComputeClosedLoop(const Plant& plant, const RowVectorXd& K,
                             const EquilibriumBasis& basis) {
  if (K.size() != plant.n()) {
    throw InputError("gain K must have n entries");
  }
  const double ff = basis.G_u + K.dot(basis.G_x);
  ClosedLoop cl;
  cl.A_hat = plant.A - plant.B * K;
  cl.B_hat = plant.B.col(0) * ff;
  cl.C_hat = plant.C - plant.D * K;
  cl.D_hat = plant.D.col(0) * ff;
  const double rho = SpectralRadius(cl.A_hat);
  if (!(rho < 1.0)) {
    std::ostringstream msg;
    msg << "A - B K is not Schur (spectral radius " << rho << ")";
    throw ValidationError(msg.str(), {msg.str()});
  }
  return cl;
}

Polyhedron ReferenceSet(const EquilibriumBasis& basis, double u_lo,
                        double u_hi, const OutputConstraints& outc) {
  const int rows = 2 + static_cast<int>(outc.h.size());
  VectorXd coef(rows);
  VectorXd off(rows);
  coef << basis.G_u, -basis.G_u, outc.H * basis.G_y;
  off << u_hi, -u_lo, outc.h;
  const double scale = std::max(1.0, coef.cwiseAbs().maxCoeff());
  std::vector<int> keep;
  for (int i = 0; i < rows; ++i) {
    if (std::abs(coef(i)) > 1e-12 * scale) {
      keep.push_back(i);
    } else if (off(i) <= 0.0) {
      throw ConfigError("steady-state reference set is empty: a pruned row "
                        "has a nonpositive offset");
    }
  }
  MatrixXd H(keep.size(), 1);
  VectorXd h(keep.size());
  for (size_t k = 0; k < keep.size(); ++k) {
    H(k, 0) = coef(keep[k]);
    h(k) = off(keep[k]);
  }
  return Polyhedron(std::move(H), std::move(h));
}

SaturatedLoop SaturatedLoop::Create(Plant plant, RowVectorXd K, double u_lo,
                                    double u_hi, double eps,
                                    const OutputConstraints& outc,
                                    ReferenceScaling scaling) {
  plant.Validate();
  outc.Validate(plant.l());
  if (!(u_lo < 0.0 && 0.0 < u_hi)) {
    throw ConfigError("saturation bounds must satisfy u_min < 0 < u_max");
  }
  if (!(eps > 0.0 && eps < 1.0)) {
    throw ConfigError("epsilon must lie in (0, 1)");
  }
  if (K.size() != plant.n() || !K.allFinite()) {
    throw InputError("gain K must have n finite entries");
  }

  SaturatedLoop loop;
  loop.basis_ = ComputeEquilibriumBasis(plant, scaling);
  loop.closed_ = ComputeClosedLoop(plant, K, loop.basis_);
  loop.R_ = ReferenceSet(loop.basis_, u_lo, u_hi, outc);
  if (loop.R_.rows() == 0) {
    throw ConfigError("steady-state reference set is unbounded");
  }
  loop.R_tight_ = Tighten(loop.R_, eps);
  const int n = plant.n();
  loop.control_row_.resize(n + 1);
  loop.control_row_ << -K, loop.basis_.G_u + K.dot(loop.basis_.G_x);

  loop.r_min_ = -std::numeric_limits<double>::infinity();
  loop.r_max_ = std::numeric_limits<double>::infinity();
  for (int i = 0; i < loop.R_tight_.rows(); ++i) {
    const double a = loop.R_tight_.H()(i, 0);
    const double b = loop.R_tight_.h()(i);
    if (a > 0) {
      loop.r_max_ = std::min(loop.r_max_, b / a);
    } else {
      loop.r_min_ = std::max(loop.r_min_, b / a);
    }
  }
  if (!std::isfinite(loop.r_min_) || !std::isfinite(loop.r_max_)) {
    throw ConfigError("steady-state reference set is unbounded on one side");
  }

  loop.plant_ = std::move(plant);
  loop.K_ = std::move(K);
  loop.u_lo_ = u_lo;
  loop.u_hi_ = u_hi;
  loop.eps_ = eps;
  return loop;
}

Polyhedron ReferenceBand(const SaturatedLoop& loop) {
  const int n = loop.n();
  const Polyhedron& R = loop.R_tight();
  MatrixXd H = MatrixXd::Zero(R.rows(), n + 1);
  H.col(n) = R.H().col(0);
  return Polyhedron(std::move(H), R.h());
}

RegionTriple BuildRegions(const SaturatedLoop& loop) {
  const int d = loop.z_dim();
  const Polyhedron band = ReferenceBand(loop);
  const RowVectorXd& w = loop.control_row();

  MatrixXd Hs(2, d);
  Hs << w, -w;
  VectorXd hs(2);
  hs << loop.u_hi(), -loop.u_lo();

  MatrixXd Hu(1, d);
  Hu << -w;
  VectorXd hu(1);
  hu << -loop.u_hi();

  MatrixXd Hl(1, d);
  Hl << w;
  VectorXd hl(1);
  hl << loop.u_lo();

  return RegionTriple{Intersect(Polyhedron(Hs, hs), band),
                      Intersect(Polyhedron(Hu, hu), band),
                      Intersect(Polyhedron(Hl, hl), band)};
}

std::vector<std::string> Diagnostics::Messages() const {
  std::vector<std::string> out;
  std::ostringstream rho;
  rho << "closed loop spectral radius " << spectral_radius
      << (schur ? " (Schur)" : " (NOT Schur)");
  out.push_back(rho.str());
  out.push_back(std::string("0 in interior of U: ") +
                (input_interior ? "yes" : "NO"));
  out.push_back(std::string("0 in interior of Y: ") +
                (output_interior ? "yes" : "NO"));
  out.push_back("null space dimension of [A - I, B]: " +
                std::to_string(null_space_dim));
  out.push_back("observability rank of (A, C): " +
                std::to_string(observability_rank) +
                (observable ? " (observable)" : " (not observable)"));
  if (authority_condition_defined) {
    std::ostringstream authority;
    authority << "control authority condition 1 + K (I - A)^-1 B = "
          << authority_condition << ": "
          << (authority_upper_applicable ? "applicable" : "not applicable");
    out.push_back(authority.str());
  } else {
    out.push_back("control authority constraint not applicable (I - A "
                  "singular)");
  }
  return out;
}

Diagnostics Validate(const Plant& plant, const RowVectorXd& K, double u_lo,
                     double u_hi, const OutputConstraints& outc, double eps) {
  plant.Validate();
  Diagnostics diag;
  if (K.size() == plant.n()) {
    diag.spectral_radius = SpectralRadius(plant.A - plant.B * K);
    diag.schur = diag.spectral_radius < 1.0;
  }
  diag.input_interior = u_lo < 0.0 && 0.0 < u_hi;
  diag.output_interior = outc.h.size() > 0 && outc.h.minCoeff() > 0.0;
  diag.null_space_dim = NullSpaceDim(NullSpaceMatrix(plant), nullptr);
  diag.observability_rank = ObservabilityRank(plant);
  diag.observable = diag.observability_rank == plant.n();
  if (K.size() == plant.n()) {
    const auto [upper, lower] = ComputeControlAuthority(plant, K, u_hi, u_lo,
                                                        eps);
    diag.authority_upper_applicable = upper.applicable;
    diag.authority_lower_applicable = lower.applicable;
    diag.authority_condition_defined = upper.x_bar.has_value();
    diag.authority_condition = upper.condition_value;
  }
  return diag;
}

}  // namespace isoas
