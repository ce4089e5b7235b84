#include "isoas/model.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "isoas/errors.hpp"
#include "isoas/propagation.hpp"
#include "test_support.hpp"

namespace isoas {
namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

// 1 + K (I - A)^-1 B for a 2x2 plant via the explicit adjugate formula.
double HandCondition(const MatrixXd& A, const MatrixXd& B,
                     const RowVectorXd& K) {
  const double a = 1 - A(0, 0), b = -A(0, 1), c = -A(1, 0), d = 1 - A(1, 1);
  const double det = a * d - b * c;
  const double v0 = (d * B(0, 0) - b * B(1, 0)) / det;
  const double v1 = (-c * B(0, 0) + a * B(1, 0)) / det;
  return 1 + K(0) * v0 + K(1) * v1;
}

class ExampleTest : public ::testing::TestWithParam<std::string> {};

TEST_P(ExampleTest, EquilibriumResidual) {
  const Problem p = testing::LoadExample(GetParam());
  const Plant& plant = p.loop.plant();
  const EquilibriumBasis& g = p.loop.basis();
  const MatrixXd I = MatrixXd::Identity(plant.n(), plant.n());
  const VectorXd res = (plant.A - I) * g.G_x + plant.B.col(0) * g.G_u;
  EXPECT_LE(res.cwiseAbs().maxCoeff(), 1e-10);
  const VectorXd gy = plant.C * g.G_x + plant.D.col(0) * g.G_u;
  EXPECT_LE((gy - g.G_y).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_P(ExampleTest, RegionsCoverTheBand) {
  const Problem p = testing::LoadExample(GetParam());
  const RegionTriple regions = BuildRegions(p.loop);
  VectorXd lo(3), hi(3);
  lo << -20, -20, p.loop.r_min();
  hi << 20, 20, p.loop.r_max();
  int covered = 0;
  const auto samples = testing::BoxSamples(lo, hi, 10000, 3);
  for (const auto& z : samples) {
    const double u = p.loop.ControlValue(z);
    const bool in_s = regions.S.Contains(z, 1e-9);
    const bool in_up = regions.S_up.Contains(z, 1e-9);
    const bool in_lo = regions.S_lo.Contains(z, 1e-9);
    if (in_s || in_up || in_lo) ++covered;
    // Independent classification from the unsaturated control value.
    EXPECT_EQ(in_s, u <= p.loop.u_hi() + 1e-9 && u >= p.loop.u_lo() - 1e-9);
    EXPECT_EQ(in_up, u >= p.loop.u_hi() - 1e-9);
    EXPECT_EQ(in_lo, u <= p.loop.u_lo() + 1e-9);
  }
  EXPECT_EQ(covered, 10000);
}

TEST_P(ExampleTest, EquilibriaInteriorToNonSaturatedRegion) {
  const Problem p = testing::LoadExample(GetParam());
  const RegionTriple regions = BuildRegions(p.loop);
  const EquilibriumBasis& g = p.loop.basis();
  for (int i = 1; i < 20; ++i) {
    const double r =
        p.loop.r_min() + (p.loop.r_max() - p.loop.r_min()) * i / 20.0;
    VectorXd z(3);
    z << g.G_x * r, r;
    EXPECT_LT(regions.S.MaxViolation(z), 0) << "r = " << r;
  }
}

TEST_P(ExampleTest, ControlRowMatchesFeedbackLaw) {
  const Problem p = testing::LoadExample(GetParam());
  const EquilibriumBasis& g = p.loop.basis();
  const VectorXd x = Vector2d(0.3, -0.7);
  const double r = 0.4;
  VectorXd z(3);
  z << x, r;
  const double u = g.G_u * r - p.K.dot(x - g.G_x * r);
  EXPECT_NEAR(p.loop.ControlValue(z), u, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Examples, ExampleTest,
                         ::testing::Values("example1", "example2",
                                           "example3"));

TEST(EquilibriumBasis, ExpectedDirections) {
  const EquilibriumBasis g1 = testing::LoadExample("example1").loop.basis();
  EXPECT_NEAR(g1.G_u, 0, 1e-12);
  EXPECT_NEAR(std::abs(g1.G_x(0)), 1, 1e-12);
  EXPECT_NEAR(g1.G_x(1), 0, 1e-12);

  const EquilibriumBasis g2 = testing::LoadExample("example2").loop.basis();
  EXPECT_NEAR(g2.G_u, 1, 1e-12);
  EXPECT_NEAR(g2.G_x(0), -1, 1e-10);
  EXPECT_NEAR(g2.G_x(1), 0, 1e-10);

  const EquilibriumBasis g3 = testing::LoadExample("example3").loop.basis();
  EXPECT_NEAR(g3.G_u, 1, 1e-12);
  EXPECT_NEAR(g3.G_x(0), 105, 1e-8);
  EXPECT_NEAR(g3.G_x(1), -11, 1e-8);

  const EquilibriumBasis g3s =
      testing::LoadExample("example3_state_scaled").loop.basis();
  EXPECT_NEAR(g3s.G_x.cwiseAbs().maxCoeff(), 1, 1e-12);
  EXPECT_NEAR(std::abs(g3s.G_u) * 105, std::abs(g3s.G_x(0)), 1e-10);
}

TEST(EquilibriumBasis, RejectsHigherDimensionalNullSpace) {
  Plant plant{MatrixXd::Identity(2, 2), Vector2d(0, 1),
              MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 1)};
  EXPECT_THROW(ComputeEquilibriumBasis(plant), ConfigError);
}

TEST(SaturatedLoop, RejectsBadParameters) {
  const Problem p = testing::LoadExample("example3");
  const Plant& plant = p.loop.plant();
  const OutputConstraints& outc = p.spec.outc;
  EXPECT_THROW(SaturatedLoop::Create(plant, RowVectorXd::Zero(2), -1, 1, 0.01,
                                     outc),
               ValidationError);
  EXPECT_THROW(SaturatedLoop::Create(plant, p.K, 1, 1, 0.01, outc),
               ConfigError);
  EXPECT_THROW(SaturatedLoop::Create(plant, p.K, 0.5, 1, 0.01, outc),
               ConfigError);
  EXPECT_THROW(SaturatedLoop::Create(plant, p.K, -1, 1, 0.0, outc),
               ConfigError);
  EXPECT_THROW(SaturatedLoop::Create(plant, p.K, -1, 1, 1.0, outc),
               ConfigError);
}

TEST(SaturatedLoop, TightenedReferenceBand) {
  const Problem p = testing::LoadExample("example2");
  // G_u = 1 and |u| <= 2 bound r to [-2, 2]; the outputs |x1| <= 5 and
  // |x2| <= 1 do not bind since G_y = (-r, 0).
  EXPECT_NEAR(p.loop.r_min(), -1.98, 1e-12);
  EXPECT_NEAR(p.loop.r_max(), 1.98, 1e-12);
}

TEST(Diagnostics, ReportsAssumptions) {
  const Problem p = testing::LoadExample("example1");
  const Diagnostics& d = p.diagnostics;
  EXPECT_TRUE(d.ok());
  EXPECT_TRUE(d.observable);
  EXPECT_EQ(d.null_space_dim, 1);
  EXPECT_LT(d.spectral_radius, 1);
  EXPECT_FALSE(d.authority_condition_defined);

  const Plant& plant = p.loop.plant();
  const Diagnostics bad = Validate(plant, RowVectorXd::Zero(2), -2, 2,
                                   p.spec.outc, 0.01);
  EXPECT_FALSE(bad.schur);
  EXPECT_FALSE(bad.ok());
}

TEST(ControlAuthority, Example2UndesirableEquilibria) {
  const Problem p = testing::LoadExample("example2");
  const Plant& plant = p.loop.plant();
  const ControlAuthorityPair auth =
      ComputeControlAuthority(plant, p.K, p.loop.u_hi(), p.loop.u_lo(), 0.01);
  ASSERT_TRUE(auth.upper.x_bar.has_value());
  ASSERT_TRUE(auth.lower.x_bar.has_value());
  EXPECT_NEAR((*auth.upper.x_bar)(0), -2, 1e-9);
  EXPECT_NEAR((*auth.upper.x_bar)(1), 0, 1e-9);
  EXPECT_NEAR((*auth.lower.x_bar)(0), 2, 1e-9);
  EXPECT_NEAR((*auth.lower.x_bar)(1), 0, 1e-9);
  // (I - A) x_bar = B u_hi.
  const MatrixXd I = MatrixXd::Identity(2, 2);
  EXPECT_LE(((I - plant.A) * *auth.upper.x_bar - plant.B.col(0) * 2)
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
  const double cond = HandCondition(plant.A, plant.B, p.K);
  EXPECT_NEAR(auth.upper.condition_value, cond, 1e-12);
  EXPECT_LT(cond, 0);
  EXPECT_TRUE(auth.upper.applicable);
  EXPECT_TRUE(auth.lower.applicable);
}

TEST(ControlAuthority, RowSeparatesUndesirableEquilibrium) {
  const Problem p = testing::LoadExample("example2");
  const ControlAuthorityPair auth = ComputeControlAuthority(
      p.loop.plant(), p.K, p.loop.u_hi(), p.loop.u_lo(), 0.01);
  for (const ControlAuthority* a : {&auth.upper, &auth.lower}) {
    ASSERT_TRUE(a->row.has_value());
    for (double r : {-1.5, 0.0, 1.5}) {
      VectorXd bad(3), origin(3);
      bad << *a->x_bar, r;
      origin << 0, 0, r;
      EXPECT_GT(a->row->dot(bad), a->offset);
      EXPECT_LT(a->row->dot(origin), a->offset);
    }
  }
}

TEST(ControlAuthority, Example3ConditionPositive) {
  const Problem p = testing::LoadExample("example3");
  const ControlAuthorityPair auth = ComputeControlAuthority(
      p.loop.plant(), p.K, p.loop.u_hi(), p.loop.u_lo(), 0.01);
  const double cond = HandCondition(p.loop.plant().A, p.loop.plant().B, p.K);
  EXPECT_NEAR(cond, 43.5876, 1e-9);
  EXPECT_NEAR(auth.upper.condition_value, cond, 1e-9);
  EXPECT_FALSE(auth.upper.applicable);
  EXPECT_FALSE(auth.lower.applicable);
  EXPECT_FALSE(auth.upper.row.has_value());
}

TEST(ControlAuthority, Example1Undefined) {
  const Problem p = testing::LoadExample("example1");
  const ControlAuthorityPair auth = ComputeControlAuthority(
      p.loop.plant(), p.K, p.loop.u_hi(), p.loop.u_lo(), 0.01);
  EXPECT_FALSE(auth.upper.x_bar.has_value());
  EXPECT_FALSE(auth.upper.applicable);
  EXPECT_FALSE(auth.lower.applicable);
}

}  // namespace
}  // namespace isoas
