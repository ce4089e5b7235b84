#include "isoas/propagation.hpp"

#include <random>

#include <gtest/gtest.h>

#include "isoas/errors.hpp"
#include "isoas/oracle.hpp"
#include "test_support.hpp"

namespace isoas {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// One saturated closed-loop step computed directly from the plant.
VectorXd PlantStep(const SaturatedLoop& loop, const VectorXd& z, double u) {
  const int n = loop.n();
  VectorXd next(n + 1);
  next << loop.plant().A * z.head(n) + loop.plant().B.col(0) * u, z(n);
  return next;
}

VectorXd Outputs(const SaturatedLoop& loop, const VectorXd& z, double u) {
  return loop.plant().C * z.head(loop.n()) + loop.plant().D.col(0) * u;
}

TEST(AffineStep, MatchesPlantDynamics) {
  const Problem p = testing::LoadExample("example2");
  const SaturatedLoop& loop = p.loop;
  const AffineStep lin = NonSaturatedStep(loop);
  const AffineStep up = SaturatedStep(loop, loop.u_hi());
  const AffineStep lo = SaturatedStep(loop, loop.u_lo());
  const auto samples = testing::BoxSamples(VectorXd::Constant(3, -3),
                                           VectorXd::Constant(3, 3), 50, 1);
  for (const auto& z : samples) {
    const VectorXd a = lin.M * z + lin.m;
    EXPECT_LE((a - PlantStep(loop, z, loop.ControlValue(z))).norm(), 1e-12);
    EXPECT_LE((up.M * z + up.m - PlantStep(loop, z, loop.u_hi())).norm(),
              1e-12);
    EXPECT_LE((lo.M * z + lo.m - PlantStep(loop, z, loop.u_lo())).norm(),
              1e-12);
  }
}

TEST(AffineStep, PullBackIdentity) {
  const Problem p = testing::LoadExample("example1");
  const AffineStep step = SaturatedStep(p.loop, p.loop.u_hi());
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  Generation gen{MatrixXd(5, 3), VectorXd(5)};
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) gen.H(i, j) = normal(rng);
    gen.h(i) = normal(rng);
  }
  const Generation back = step.PullBack(gen);
  const auto samples = testing::BoxSamples(VectorXd::Constant(3, -2),
                                           VectorXd::Constant(3, 2), 20, 2);
  for (const auto& z : samples) {
    const VectorXd lhs = back.H * z - back.h;
    const VectorXd rhs = gen.H * (step.M * z + step.m) - gen.h;
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Seeds, EncodeOutputConstraints) {
  const Problem p = testing::LoadExample("example1");
  const SaturatedLoop& loop = p.loop;
  const OutputConstraints& outc = p.spec.outc;
  const Generation ns = NonSaturatedSeed(loop, outc);
  const ControlAuthorityPair auth = ComputeControlAuthority(
      loop.plant(), loop.K(), loop.u_hi(), loop.u_lo(), loop.eps());
  const Generation up = UpperSeed(loop, outc, auth.upper);
  const auto samples = testing::BoxSamples(VectorXd::Constant(3, -6),
                                           VectorXd::Constant(3, 6), 200, 8);
  for (const auto& z : samples) {
    const VectorXd y_lin = Outputs(loop, z, loop.ControlValue(z));
    const bool ok_lin = ((outc.H * y_lin - outc.h).array() <= 0).all();
    EXPECT_EQ(ok_lin, ((ns.H * z - ns.h).array() <= 0).all());
    const VectorXd y_up = Outputs(loop, z, loop.u_hi());
    const bool ok_up = ((outc.H * y_up - outc.h).array() <= 0).all();
    EXPECT_EQ(ok_up, ((up.H * z - up.h).array() <= 0).all());
  }
}

PropagationConfig Config(bool prevention) {
  PropagationConfig cfg;
  cfg.empty_set_prevention = prevention;
  return cfg;
}

// For z in the propagated set, the one-step successor under the region's
// dynamics either stays in the set or leaves the region, and the outputs at z
// are admissible.
void CheckDichotomy(const SaturatedLoop& loop, const OutputConstraints& outc,
                    const Polyhedron& region, const PropagationResult& res,
                    int which) {
  ASSERT_FALSE(IsEmpty(res.Q));
  const auto samples = SampleUnion({res.Q}, 100, 17);
  ASSERT_EQ(samples.size(), 100u);
  for (const auto& z : samples) {
    const double u = which == 0   ? loop.ControlValue(z)
                     : which == 1 ? loop.u_hi()
                                  : loop.u_lo();
    const VectorXd y = Outputs(loop, z, u);
    EXPECT_LE((outc.H * y - outc.h).maxCoeff(), 1e-8);
    const VectorXd next = PlantStep(loop, z, u);
    const bool stays = res.Q.Contains(next, 1e-8);
    const bool leaves = !region.Contains(next, -1e-9);
    EXPECT_TRUE(stays || leaves) << z.transpose();
  }
}

TEST(Propagate, NonSaturatedDichotomy) {
  const Problem p = testing::LoadExample("example1");
  const RegionTriple regions = BuildRegions(p.loop);
  const PropagationResult res = PropagateNonSaturated(
      regions.S, NonSaturatedSeed(p.loop, p.spec.outc), p.loop, Config(true));
  EXPECT_GT(res.steps, 0);
  CheckDichotomy(p.loop, p.spec.outc, regions.S, res, 0);
}

TEST(Propagate, SaturatedDichotomy) {
  // Open-loop stable plant: saturated propagation terminates without
  // empty-set prevention, so the exact dichotomy applies.
  MatrixXd A(2, 2);
  A << 0.5, 0.1, 0, 0.6;
  Plant plant{A, Eigen::Vector2d(0, 1), MatrixXd::Identity(2, 2),
              MatrixXd::Zero(2, 1)};
  MatrixXd H(4, 2);
  H << 1, 0, -1, 0, 0, 1, 0, -1;
  const OutputConstraints outc{H, Eigen::Vector4d(2, 2, 3, 3)};
  const SaturatedLoop loop = SaturatedLoop::Create(
      plant, Eigen::RowVector2d(0.1, 0.3), -1, 1, 0.01, outc);
  const RegionTriple regions = BuildRegions(loop);
  const ControlAuthorityPair auth = ComputeControlAuthority(
      plant, loop.K(), loop.u_hi(), loop.u_lo(), loop.eps());
  const PropagationResult up = PropagateUpper(
      regions.S_up, UpperSeed(loop, outc, auth.upper), loop, Config(false));
  CheckDichotomy(loop, outc, regions.S_up, up, 1);
  const PropagationResult lo = PropagateLower(
      regions.S_lo, LowerSeed(loop, outc, auth.lower), loop, Config(false));
  CheckDichotomy(loop, outc, regions.S_lo, lo, 2);
}

TEST(Propagate, PreventionKeepsOutputAdmissibility) {
  // With prevention the seed generation is still retained, so every point of
  // the saturated set has admissible outputs.
  const Problem p = testing::LoadExample("example1");
  const RegionTriple regions = BuildRegions(p.loop);
  const ControlAuthorityPair auth = ComputeControlAuthority(
      p.loop.plant(), p.K, p.loop.u_hi(), p.loop.u_lo(), p.loop.eps());
  const PropagationResult up =
      PropagateUpper(regions.S_up, UpperSeed(p.loop, p.spec.outc, auth.upper),
                     p.loop, Config(true));
  const auto samples = SampleUnion({up.Q}, 100, 23);
  ASSERT_EQ(samples.size(), 100u);
  for (const auto& z : samples) {
    const VectorXd y = Outputs(p.loop, z, p.loop.u_hi());
    EXPECT_LE((p.spec.outc.H * y - p.spec.outc.h).maxCoeff(), 1e-8);
    EXPECT_TRUE(regions.S_up.Contains(z, 1e-8));
  }
}

TEST(Propagate, EmptySetPreventionKeepsSaturatedSetNonempty) {
  const Problem p = testing::LoadExample("example1");
  const RegionTriple regions = BuildRegions(p.loop);
  const ControlAuthorityPair auth = ComputeControlAuthority(
      p.loop.plant(), p.K, p.loop.u_hi(), p.loop.u_lo(), p.loop.eps());
  const Generation seed = UpperSeed(p.loop, p.spec.outc, auth.upper);
  const PropagationResult off =
      PropagateUpper(regions.S_up, seed, p.loop, Config(false));
  const PropagationResult on =
      PropagateUpper(regions.S_up, seed, p.loop, Config(true));
  EXPECT_TRUE(IsEmpty(off.Q));
  EXPECT_FALSE(IsEmpty(on.Q));
  EXPECT_GT(on.prevention_dropped, 0);
  EXPECT_EQ(off.prevention_dropped, 0);
}

TEST(Propagate, EmptySeedReturnsRegion) {
  const Problem p = testing::LoadExample("example1");
  const RegionTriple regions = BuildRegions(p.loop);
  const PropagationResult res =
      PropagateNonSaturated(regions.S, EmptyGeneration(3), p.loop, Config(true));
  EXPECT_EQ(res.steps, 0);
  EXPECT_EQ(res.Q.rows(), regions.S.rows());
  EXPECT_TRUE(res.bundle.empty());
}

TEST(Propagate, StepCap) {
  const Problem p = testing::LoadExample("example1");
  const RegionTriple regions = BuildRegions(p.loop);
  PropagationConfig cfg = Config(true);
  cfg.k_max = 1;
  EXPECT_THROW(PropagateNonSaturated(regions.S,
                                     NonSaturatedSeed(p.loop, p.spec.outc),
                                     p.loop, cfg),
               CapExceededError);
  cfg.k_max = 500;
  cfg.row_cap = 2;
  EXPECT_THROW(PropagateNonSaturated(regions.S,
                                     NonSaturatedSeed(p.loop, p.spec.outc),
                                     p.loop, cfg),
               CapExceededError);
}

TEST(EmptySetPrevention, RequiresAlignedRows) {
  const Generation g1{MatrixXd::Identity(2, 2), VectorXd::Ones(2)};
  const Generation g2{MatrixXd::Identity(1, 2), VectorXd::Ones(1)};
  EXPECT_THROW(EmptySetPrevention(g1, g2, EmptyGeneration(2),
                                  Polyhedron::FullSpace(2), Tolerances{}),
               InputError);
}

TEST(EmptySetPrevention, DropsRowsImpliedByTheirSuccessor) {
  // Row 0: x <= 1 with successor 0.5 x <= 0.4, i.e. x <= 0.8, which implies
  // the row. Row 1: y <= 1 with successor 2 y <= 4 does not imply it.
  Generation g1{MatrixXd::Identity(2, 2), VectorXd::Ones(2)};
  Generation g2{MatrixXd(2, 2), VectorXd(2)};
  g2.H << 0.5, 0, 0, 2;
  g2.h << 0.4, 4;
  MatrixXd box(4, 2);
  box << 1, 0, -1, 0, 0, 1, 0, -1;
  const Polyhedron region(box, VectorXd::Constant(4, 5));
  int dropped = 0;
  const Generation kept = EmptySetPrevention(g1, g2, EmptyGeneration(2),
                                             region, Tolerances{}, &dropped);
  EXPECT_EQ(dropped, 1);
  ASSERT_EQ(kept.rows(), 1);
  EXPECT_DOUBLE_EQ(kept.H(0, 1), 1);
}

}  // namespace
}  // namespace isoas
