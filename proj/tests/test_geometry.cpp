#include <gtest/gtest.h>

#include <cmath>

#include "degen/errors.hpp"
#include "degen/geometry.hpp"
#include "degen/grid.hpp"

using namespace degen;

namespace {

Point pt(std::initializer_list<double> v) {
  Point x(Index(v.size()));
  Index i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

}  // namespace

TEST(Grid, CenteredHasCellAtOrigin) {
  const auto g = GridDomain::centered(2, 1.0, 0.25);
  EXPECT_EQ(g.counts()[0], 9);
  const Index c = g.nearest_cell(pt({0, 0}));
  EXPECT_LT(g.center(c).norm(), 1e-15);
}

TEST(Grid, LastAxisFastest) {
  const auto g = GridDomain::centered(2, 1.0, 0.5);
  EXPECT_EQ(g.index({0, 1}), 1);
  EXPECT_EQ(g.index({1, 0}), g.counts()[1]);
  EXPECT_EQ(g.shift(0, 1, 1), 1);
  EXPECT_EQ(g.shift(0, 0, -1), -1);
}

TEST(Grid, BoundaryIsOuterLayer) {
  const auto g = GridDomain::centered(2, 1.0, 0.5);  // 5 x 5
  EXPECT_EQ(g.boundary_cells().size(), 16u);
}

TEST(Grid, CenteredGradientExactOnLinear) {
  const auto g = GridDomain::centered(2, 1.0, 0.125);
  const ScalarField f = g.sample([](const Point& x) { return 3 * x(0) - 2 * x(1); });
  const VectorField G = centered_gradient(f, g);
  EXPECT_LT((G.row(0).array() - 3).abs().maxCoeff(), 1e-12);
  EXPECT_LT((G.row(1).array() + 2).abs().maxCoeff(), 1e-12);
}

TEST(Metric, EuclideanDistances) {
  const auto g = GridDomain::centered(2, 1.0, 0.25);
  const auto sp = QuasimetricSpace::euclidean();
  const ScalarField rho = sp.distances_from(g, pt({0, 0}));
  for (Index c = 0; c < g.size(); ++c) EXPECT_NEAR(rho(c), g.center(c).norm(), 1e-15);
  EXPECT_NEAR(sp.r0(g, pt({0, 0})), 1.0, 1e-15);
}

TEST(Metric, SubunitOfIdentityIsNearEuclideanAlongAxes) {
  const auto g = GridDomain::centered(2, 1.0, 0.125);
  const ScalarField rho = subunit_distance(QuadraticFormField::identity(2), g, pt({0, 0}));
  const Index c = g.nearest_cell(pt({0.5, 0}));
  EXPECT_NEAR(rho(c), 0.5, 1e-12);
  const Index d = g.nearest_cell(pt({0.5, 0.5}));
  EXPECT_NEAR(rho(d), std::sqrt(0.5), 1e-12);
}

TEST(Metric, SubunitScalesInverselyWithForm) {
  const auto g = GridDomain::centered(2, 1.0, 0.125);
  const auto Q = QuadraticFormField::grushin(2);
  const ScalarField a = subunit_distance(Q, g, pt({0.25, 0}));
  const ScalarField b = subunit_distance(Q.times(4), g, pt({0.25, 0}));
  for (Index c = 0; c < g.size(); ++c) {
    if (std::isinf(a(c))) {
      EXPECT_TRUE(std::isinf(b(c)));
    } else {
      EXPECT_NEAR(b(c), a(c) / 2, 1e-12 * (1 + a(c)));
    }
  }
}

TEST(Metric, GrushinVerticalMotionCostsMoreNearTheDegeneracy) {
  const auto g = GridDomain::centered(2, 1.0, 0.0625);
  const auto Q = QuadraticFormField::grushin(2);
  const ScalarField rho = subunit_distance(Q, g, pt({0, 0}));
  const double vertical = rho(g.nearest_cell(pt({0, 0.25})));
  const double horizontal = rho(g.nearest_cell(pt({0.25, 0})));
  EXPECT_GT(vertical, horizontal);
  EXPECT_TRUE(std::isfinite(vertical));
}

TEST(Ball, MembershipIsStrictAndMeasureCounts) {
  const auto g = GridDomain::centered(2, 1.0, 0.25);
  const auto b = ball_membership(QuasimetricSpace::euclidean(), g, pt({0, 0}), 0.25);
  EXPECT_EQ(b.cells.size(), 1u);
  EXPECT_DOUBLE_EQ(b.measure, 0.0625);
  const auto b2 = sub_ball(g, b, 0.3);
  EXPECT_EQ(b2.cells.size(), 5u);
}

TEST(Ball, EmptyRaises) {
  const auto g = GridDomain::centered(2, 1.0, 0.25);
  try {
    ball_membership(QuasimetricSpace::euclidean(), g, pt({0.1, 0.1}), 0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyBall);
  }
}

TEST(Dqstar, EuclideanPlaneGivesTwo) {
  const auto g = GridDomain::centered(2, 1.0, 1.0 / 64);
  const auto est = estimate_Dqstar(QuasimetricSpace::euclidean(), g, {pt({0, 0}), pt({0.1, -0.05})},
                                   {0.1, 0.15, 0.2, 0.3});
  EXPECT_NEAR(est.qstar, 2, 0.15);
  EXPECT_NEAR(est.c0, M_PI, 0.15 * M_PI);
}

TEST(Dqstar, RadiusBeyondAdmissibleRaises) {
  const auto g = GridDomain::centered(2, 1.0, 1.0 / 16);
  try {
    estimate_Dqstar(QuasimetricSpace::euclidean(), g, {pt({0, 0})}, {0.1, 0.6});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PreconditionViolated);
  }
}

TEST(Doubling, EuclideanRatioNearFour) {
  const auto g = GridDomain::centered(2, 1.0, 1.0 / 64);
  const auto d = estimate_doubling(QuasimetricSpace::euclidean(), g, {{pt({0, 0}), 0.2, 0}});
  ASSERT_EQ(d.ratios.size(), 1u);
  EXPECT_NEAR(d.ratios[0], 4, 0.3);
}

TEST(Compatibility, EuclideanHolds) {
  const auto g = GridDomain::centered(2, 1.0, 1.0 / 32);
  const auto rep = check_compatibility(QuasimetricSpace::euclidean(), g, {pt({0, 0})}, {0.25, 0.5}, {0.1, 0.2});
  EXPECT_TRUE(rep.cond0);
  EXPECT_TRUE(rep.cond1);
}
