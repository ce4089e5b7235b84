#include "isoas/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "isoas/errors.hpp"

namespace isoas {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double Saturate(double u, double u_lo, double u_hi) {
  return std::clamp(u, u_lo, u_hi);
}

namespace {

double Input(const SaturatedLoop& loop, const VectorXd& x, double r) {
  const int n = loop.n();
  const double u = loop.control_row().head(n).dot(x) +
                   loop.control_row()(n) * r;
  return Saturate(u, loop.u_lo(), loop.u_hi());
}

VectorXd Lift(const VectorXd& x, double r) {
  VectorXd z(x.size() + 1);
  z << x, r;
  return z;
}

void Record(VerificationReport* report, const char* kind, const VectorXd& z,
            double margin, int step) {
  if (static_cast<int>(report->examples.size()) <
      report->options.max_examples) {
    report->examples.push_back(SampleViolation{kind, z, margin, step});
  }
}

struct SamplingBox {
  int piece;
  VectorXd lo;
  VectorXd hi;
  double volume;
};

// Boxes of the nonempty pieces. Throws UnboundedError for unbounded pieces.
std::vector<SamplingBox> MakeBoxes(const std::vector<Polyhedron>& pieces,
                                   double inflation) {
  std::vector<SamplingBox> boxes;
  for (size_t p = 0; p < pieces.size(); ++p) {
    if (IsEmpty(pieces[p])) continue;
    const Box box = BoundingBox(pieces[p]);
    const VectorXd pad =
        (inflation * 0.5 * (box.hi - box.lo)).cwiseMax(1e-9);
    SamplingBox sb{static_cast<int>(p), box.lo - pad, box.hi + pad, 1.0};
    sb.volume = (sb.hi - sb.lo).prod();
    boxes.push_back(std::move(sb));
  }
  return boxes;
}

class UnionSampler {
 public:
  UnionSampler(const std::vector<Polyhedron>& pieces,
               std::vector<SamplingBox> boxes, std::uint64_t seed)
      : pieces_(pieces), boxes_(std::move(boxes)), rng_(seed) {
    std::vector<double> w;
    for (const auto& b : boxes_) w.push_back(b.volume);
    pick_ = std::discrete_distribution<int>(w.begin(), w.end());
  }

  // Draws one candidate; returns the piece index on acceptance, -1 otherwise.
  int Draw(VectorXd* z) {
    const SamplingBox& b = boxes_[pick_(rng_)];
    z->resize(b.lo.size());
    for (int i = 0; i < b.lo.size(); ++i) {
      (*z)(i) = std::uniform_real_distribution<double>(b.lo(i), b.hi(i))(rng_);
    }
    return pieces_[b.piece].Contains(*z, 0.0) ? b.piece : -1;
  }

 private:
  const std::vector<Polyhedron>& pieces_;
  std::vector<SamplingBox> boxes_;
  std::mt19937_64 rng_;
  std::discrete_distribution<int> pick_;
};

}  // namespace

Trajectory Simulate(const SaturatedLoop& loop,
                    const Eigen::Ref<const VectorXd>& x0, double r, int T) {
  if (T < 1) throw InputError("Simulate: T must be >= 1");
  if (x0.size() != loop.n()) throw InputError("Simulate: x0 must have n entries");
  const Plant& p = loop.plant();
  Trajectory traj;
  traj.r = r;
  traj.length = T;
  traj.states.reserve(T + 1);
  traj.inputs.reserve(T + 1);
  traj.outputs.reserve(T + 1);
  VectorXd x = x0;
  for (int k = 0; k <= T; ++k) {
    const double u = Input(loop, x, r);
    traj.states.push_back(x);
    traj.inputs.push_back(u);
    traj.outputs.push_back(p.C * x + p.D.col(0) * u);
    x = p.A * x + p.B.col(0) * u;
  }
  return traj;
}

const char* ToString(OmegaVerdict verdict) {
  switch (verdict) {
    case OmegaVerdict::kMember:
      return "Member";
    case OmegaVerdict::kNonMember:
      return "NonMember";
    case OmegaVerdict::kUndecided:
      return "Undecided";
  }
  return "?";
}

OmegaResult OmegaMembership(const SaturatedLoop& loop,
                            const OutputConstraints& outc,
                            const Polyhedron& moas,
                            const Eigen::Ref<const VectorXd>& z, int T_max,
                            double tol) {
  const int n = loop.n();
  if (z.size() != n + 1) throw InputError("OmegaMembership: z must be n + 1");
  const Plant& p = loop.plant();
  const double r = z(n);
  VectorXd x = z.head(n);
  for (int k = 0; k <= T_max; ++k) {
    const double u = Input(loop, x, r);
    const VectorXd y = p.C * x + p.D.col(0) * u;
    if (((outc.H * y - outc.h).array() > tol).any()) {
      return OmegaResult{OmegaVerdict::kNonMember, k};
    }
    if (moas.Contains(Lift(x, r), 0.0)) {
      return OmegaResult{OmegaVerdict::kMember, k};
    }
    x = p.A * x + p.B.col(0) * u;
  }
  return OmegaResult{OmegaVerdict::kUndecided, T_max};
}

std::vector<VectorXd> SampleUnion(const std::vector<Polyhedron>& pieces, int n,
                                  std::uint64_t seed, double box_inflation,
                                  int max_attempts_per_sample) {
  std::vector<VectorXd> out;
  std::vector<SamplingBox> boxes = MakeBoxes(pieces, box_inflation);
  if (boxes.empty() || n <= 0) return out;
  UnionSampler sampler(pieces, std::move(boxes), seed);
  const long long budget =
      static_cast<long long>(n) * std::max(1, max_attempts_per_sample);
  VectorXd z;
  for (long long a = 0; a < budget && static_cast<int>(out.size()) < n; ++a) {
    if (sampler.Draw(&z) >= 0) out.push_back(z);
  }
  return out;
}

VerificationReport VerifySet(const std::vector<Polyhedron>& pieces,
                             const SaturatedLoop& loop,
                             const OutputConstraints& outc,
                             const Polyhedron& moas,
                             const VerifyOptions& options) {
  VerificationReport report;
  report.options = options;
  report.samples_per_piece.assign(pieces.size(), 0);
  const int n = loop.n();
  const Plant& p = loop.plant();

  std::vector<SamplingBox> boxes;
  try {
    boxes = MakeBoxes(pieces, options.box_inflation);
  } catch (const UnboundedError&) {
    report.sampling_failed = true;
    report.sampling_message = "a piece is unbounded";
    return report;
  }
  if (boxes.empty()) {
    report.sampling_failed = true;
    report.sampling_message = "all pieces are empty";
    return report;
  }

  UnionSampler sampler(pieces, std::move(boxes), options.seed);
  const long long budget = static_cast<long long>(options.n_samples) *
                           std::max(1, options.max_attempts_per_sample);
  VectorXd z;
  while (report.samples < options.n_samples) {
    if (report.attempts >= budget) {
      report.sampling_failed = true;
      report.sampling_message = "rejection sampling budget exhausted";
      break;
    }
    ++report.attempts;
    const int piece = sampler.Draw(&z);
    if (piece < 0) continue;
    ++report.samples;
    ++report.samples_per_piece[piece];

    const double r = z(n);
    const VectorXd x = z.head(n);

    // One-step invariance under the saturated dynamics.
    const double u0 = Input(loop, x, r);
    const VectorXd z1 = Lift(p.A * x + p.B.col(0) * u0, r);
    double best = std::numeric_limits<double>::infinity();
    for (const Polyhedron& q : pieces) {
      if (q.rows() == 0) {
        best = -std::numeric_limits<double>::infinity();
        break;
      }
      best = std::min(best, q.MaxViolation(z1));
    }
    report.worst_invariance_margin =
        std::max(report.worst_invariance_margin, best);
    if (best > options.tol) {
      ++report.invariance_violations;
      Record(&report, "invariance", z, best, 1);
    }

    // T-step output admissibility.
    const Trajectory traj = Simulate(loop, x, r, options.T);
    double worst = -std::numeric_limits<double>::infinity();
    int worst_k = 0;
    bool saturated = false;
    for (int k = 0; k <= options.T; ++k) {
      const double m = (outc.H * traj.outputs[k] - outc.h).maxCoeff();
      if (m > worst) {
        worst = m;
        worst_k = k;
      }
      const double u_lin = loop.control_row().head(n).dot(traj.states[k]) +
                           loop.control_row()(n) * r;
      if (u_lin > loop.u_hi() + options.tol ||
          u_lin < loop.u_lo() - options.tol) {
        saturated = true;
      }
    }
    report.worst_output_margin = std::max(report.worst_output_margin, worst);
    if (worst > options.tol) {
      ++report.output_violations;
      Record(&report, "output", z, worst, worst_k);
    }
    if (saturated) ++report.saturation_events;

    if (report.samples <= options.omega_samples) {
      const OmegaResult om = OmegaMembership(loop, outc, moas, z,
                                             options.omega_T_max, options.tol);
      switch (om.verdict) {
        case OmegaVerdict::kMember:
          ++report.omega_member;
          break;
        case OmegaVerdict::kNonMember:
          ++report.omega_nonmember;
          Record(&report, "omega", z, 0.0, om.step);
          break;
        case OmegaVerdict::kUndecided:
          ++report.omega_undecided;
          break;
      }
    }
  }
  return report;
}

double RiccatiResidual(const Plant& plant, const MatrixXd& Q, double R,
                       const MatrixXd& P) {
  const MatrixXd& A = plant.A;
  const MatrixXd& B = plant.B;
  const MatrixXd S = (MatrixXd::Constant(1, 1, R) + B.transpose() * P * B);
  const MatrixXd res = A.transpose() * P * A - P -
                       A.transpose() * P * B * S.inverse() * B.transpose() *
                           P * A +
                       Q;
  return res.cwiseAbs().rowwise().sum().maxCoeff();
}

LqrResult LqrGain(const Plant& plant, const MatrixXd& Q, double R,
                  int max_iterations) {
  plant.Validate();
  const int n = plant.n();
  if (Q.rows() != n || Q.cols() != n) throw InputError("LqrGain: Q must be n x n");
  if (!(R > 0.0)) throw InputError("LqrGain: R must be positive");
  const MatrixXd& A = plant.A;
  const MatrixXd& B = plant.B;

  MatrixXd P = Q;
  LqrResult out;
  bool converged = false;
  for (int it = 1; it <= max_iterations; ++it) {
    const double s = R + (B.transpose() * P * B)(0, 0);
    const MatrixXd PA = P * A;
    const MatrixXd BtPA = B.transpose() * PA;
    MatrixXd next = A.transpose() * PA -
                    BtPA.transpose() * BtPA / s + Q;
    next = 0.5 * (next + next.transpose());
    const double delta = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    out.iterations = it;
    if (delta <= 1e-12) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw SolverError("LqrGain: Riccati iteration did not converge within " +
                      std::to_string(max_iterations) + " iterations");
  }
  const double s = R + (B.transpose() * P * B)(0, 0);
  out.K = (B.transpose() * P * A) / s;
  out.P = P;
  out.residual = RiccatiResidual(plant, Q, R, P);
  if (!(SpectralRadius(A - B * out.K) < 1.0)) {
    throw SolverError("LqrGain: resulting A - B K is not Schur");
  }
  return out;
}

}  // namespace isoas
