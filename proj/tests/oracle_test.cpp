#include "isoas/oracle.hpp"

#include <gtest/gtest.h>

#include "isoas/errors.hpp"
#include "isoas/isoas.hpp"
#include "test_support.hpp"

namespace isoas {
namespace {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

// Riccati residual computed independently of the library.
double DareResidual(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                    double R, const MatrixXd& P) {
  const MatrixXd S = (R + (B.transpose() * P * B)(0, 0)) *
                     MatrixXd::Identity(1, 1);
  const MatrixXd rhs = A.transpose() * P * A -
                       A.transpose() * P * B * S.inverse() * B.transpose() *
                           P * A +
                       Q;
  return (rhs - P).cwiseAbs().maxCoeff();
}

TEST(Saturate, Clamps) {
  EXPECT_EQ(Saturate(3.0, -2.0, 2.0), 2.0);
  EXPECT_EQ(Saturate(-3.0, -2.0, 2.0), -2.0);
  EXPECT_EQ(Saturate(0.5, -2.0, 2.0), 0.5);
  EXPECT_EQ(Saturate(2.0, -2.0, 2.0), 2.0);
}

TEST(Simulate, RecursionAndBounds) {
  const Problem p = testing::LoadExample("example3");
  const SaturatedLoop& loop = p.loop;
  const Trajectory traj = Simulate(loop, Vector2d(3, -2), 0.5, 200);
  ASSERT_EQ(traj.states.size(), 201u);
  ASSERT_EQ(traj.inputs.size(), 201u);
  ASSERT_EQ(traj.outputs.size(), 201u);
  for (int k = 0; k < traj.length; ++k) {
    const VectorXd next = loop.plant().A * traj.states[k] +
                          loop.plant().B.col(0) * traj.inputs[k];
    EXPECT_LE((next - traj.states[k + 1]).cwiseAbs().maxCoeff(), 1e-12);
  }
  for (int k = 0; k <= traj.length; ++k) {
    EXPECT_LE(traj.inputs[k], loop.u_hi());
    EXPECT_GE(traj.inputs[k], loop.u_lo());
    VectorXd z(3);
    z << traj.states[k], 0.5;
    EXPECT_DOUBLE_EQ(traj.inputs[k],
                     Saturate(loop.ControlValue(z), loop.u_lo(), loop.u_hi()));
  }
  EXPECT_THROW(Simulate(loop, Vector2d(0, 0), 0, 0), InputError);
}

TEST(Simulate, EquilibriumIsStationary) {
  const Problem p = testing::LoadExample("example2");
  const double r = 0.7;
  const VectorXd xe = p.loop.basis().G_x * r;
  const Trajectory traj = Simulate(p.loop, xe, r, 50);
  for (const auto& x : traj.states) EXPECT_LE((x - xe).norm(), 1e-12);
}

TEST(Simulate, UndesirableEquilibriumOfExample2) {
  // x_bar = (-2, 0) at r = 0 saturates high forever and never moves.
  const Problem p = testing::LoadExample("example2");
  const Trajectory traj = Simulate(p.loop, Vector2d(-2, 0), 0.0, 100);
  for (int k = 0; k <= traj.length; ++k) {
    EXPECT_DOUBLE_EQ(traj.inputs[k], p.loop.u_hi());
    EXPECT_LE((traj.states[k] - Vector2d(-2, 0)).norm(), 1e-12);
  }
}

TEST(OmegaMembership, Verdicts) {
  const Problem p = testing::LoadExample("example1");
  const MoasResult moas = ComputeMoas(p.loop, p.spec.outc, p.spec.config);
  const OmegaResult origin =
      OmegaMembership(p.loop, p.spec.outc, moas.O, VectorXd::Zero(3));
  EXPECT_EQ(origin.verdict, OmegaVerdict::kMember);
  EXPECT_EQ(origin.step, 0);

  VectorXd bad(3);
  bad << 6, 0, 0;  // |y1| <= 5 violated immediately
  const OmegaResult nm = OmegaMembership(p.loop, p.spec.outc, moas.O, bad);
  EXPECT_EQ(nm.verdict, OmegaVerdict::kNonMember);
  EXPECT_EQ(nm.step, 0);

  VectorXd later(3);
  later << 4.95, 1.0, 0;  // admissible now, x1 reaches 5.05 next step
  const OmegaResult lt = OmegaMembership(p.loop, p.spec.outc, moas.O, later);
  EXPECT_EQ(lt.verdict, OmegaVerdict::kNonMember);
  EXPECT_GT(lt.step, 0);
}

TEST(OmegaMembership, MonotoneInHorizon) {
  // A verdict reached with a short horizon is unchanged by a longer one.
  const Problem p = testing::LoadExample("example3");
  const MoasResult moas = ComputeMoas(p.loop, p.spec.outc, p.spec.config);
  const auto samples = testing::BoxSamples(
      Eigen::Vector3d(-10, -10, -0.05), Eigen::Vector3d(10, 10, 0.05), 200, 4);
  for (const auto& z : samples) {
    const OmegaResult s = OmegaMembership(p.loop, p.spec.outc, moas.O, z, 20);
    const OmegaResult l = OmegaMembership(p.loop, p.spec.outc, moas.O, z, 400);
    if (s.verdict != OmegaVerdict::kUndecided) {
      EXPECT_EQ(s.verdict, l.verdict);
      EXPECT_EQ(s.step, l.step);
    }
  }
}

TEST(Lqr, ZeroDynamics) {
  Plant plant{MatrixXd::Zero(2, 2), Vector2d(1, 0), MatrixXd::Identity(2, 2),
              MatrixXd::Zero(2, 1)};
  const MatrixXd Q = MatrixXd::Identity(2, 2);
  const LqrResult res = LqrGain(plant, Q, 1.0);
  EXPECT_LE((res.P - Q).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(res.K.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lqr, Example1ResidualAndStability) {
  const Problem p = testing::LoadExample("example1");
  const Plant& plant = p.loop.plant();
  const MatrixXd Q = MatrixXd::Identity(2, 2);
  const LqrResult res = LqrGain(plant, Q, 1.0);
  EXPECT_LE(DareResidual(plant.A, plant.B, Q, 1.0, res.P), 1e-10);
  EXPECT_LE(RiccatiResidual(plant, Q, 1.0, res.P), 1e-10);
  const MatrixXd Acl = plant.A - plant.B * res.K;
  EXPECT_LT(Acl.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
  // K = (R + B'PB)^-1 B'PA.
  const MatrixXd K = (plant.B.transpose() * res.P * plant.A) /
                     (1.0 + (plant.B.transpose() * res.P * plant.B)(0, 0));
  EXPECT_LE((K - res.K).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Lqr, Example2LemmaSign) {
  const Problem p = testing::LoadExample("example2");
  ASSERT_TRUE(p.lqr.has_value());
  // (I - A)^-1 B = (-1, 0), so the condition is 1 - K1 and K1 > 1.
  EXPECT_GT(p.K(0), 1.0);
  EXPECT_TRUE(p.diagnostics.authority_condition_defined);
  EXPECT_NEAR(p.diagnostics.authority_condition, 1.0 - p.K(0), 1e-10);
}

TEST(Lqr, RejectsBadWeights) {
  const Problem p = testing::LoadExample("example1");
  EXPECT_THROW(LqrGain(p.loop.plant(), MatrixXd::Identity(3, 3), 1.0),
               InputError);
  EXPECT_THROW(LqrGain(p.loop.plant(), MatrixXd::Identity(2, 2), 0.0),
               InputError);
}

TEST(VerifySet, MoasIsClean) {
  const Problem p = testing::LoadExample("example1");
  const MoasResult moas = ComputeMoas(p.loop, p.spec.outc, p.spec.config);
  VerifyOptions opts;
  opts.n_samples = 500;
  opts.T = 200;
  opts.omega_samples = 50;
  const VerificationReport rep =
      VerifySet({moas.O}, p.loop, p.spec.outc, moas.O, opts);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.samples, 500);
  EXPECT_EQ(rep.saturation_events, 0);
  EXPECT_EQ(rep.omega_member, 50);
}

TEST(VerifySet, DetectsNonInvariantSet) {
  // A box around the origin of example 1 that is far larger than any
  // admissible set must show violations.
  const Problem p = testing::LoadExample("example1");
  const MoasResult moas = ComputeMoas(p.loop, p.spec.outc, p.spec.config);
  MatrixXd H(6, 3);
  H << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
  VectorXd h(6);
  h << 5, 5, 1, 1, 0.5, 0.5;
  VerifyOptions opts;
  opts.n_samples = 300;
  opts.T = 100;
  const VerificationReport rep =
      VerifySet({Polyhedron(H, h)}, p.loop, p.spec.outc, moas.O, opts);
  EXPECT_FALSE(rep.ok());
  EXPECT_GT(rep.output_violations + rep.invariance_violations, 0);
  EXPECT_FALSE(rep.examples.empty());
}

TEST(VerifySet, EmptySetFailsSampling) {
  const Problem p = testing::LoadExample("example1");
  VerifyOptions opts;
  opts.n_samples = 10;
  const VerificationReport rep = VerifySet({Polyhedron::Empty(3)}, p.loop,
                                           p.spec.outc, Polyhedron::Empty(3),
                                           opts);
  EXPECT_TRUE(rep.sampling_failed);
  EXPECT_FALSE(rep.ok());
}

TEST(SampleUnion, PointsAreMembersAndDeterministic) {
  MatrixXd H(3, 2);
  H << -1, 0, 0, -1, 1, 1;
  const Polyhedron tri(H, Eigen::Vector3d(0, 0, 1));
  const auto a = SampleUnion({tri}, 200, 42);
  const auto b = SampleUnion({tri}, 200, 42);
  ASSERT_EQ(a.size(), 200u);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(tri.Contains(a[i], 0));
    EXPECT_EQ(a[i], b[i]);
  }
}

}  // namespace
}  // namespace isoas
