#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "degen/function_spaces.hpp"
#include "oracles.hpp"

using namespace degen;

namespace {

Point origin2() { return Point::Zero(2); }

std::vector<double> cell_values(const ScalarField& f, const std::vector<Index>& cells) {
  std::vector<double> v;
  for (Index c : cells) v.push_back(f(c));
  return v;
}

}  // namespace

TEST(Avnorm, MatchesDirectSummation) {
  const auto g = GridDomain::centered(2, 1.0, 1.0 / 16);
  const ScalarField f = g.sample([](const Point& x) { return 1 + x(0) * x(0) - 0.5 * x(1); });
  const auto b = ball_membership(QuasimetricSpace::euclidean(), g, origin2(), 0.6);
  for (double a : {1.0, 2.0, 3.5, 40.0}) {
    const double ref = oracle::mean_power(cell_values(f, b.cells), a);
    EXPECT_NEAR(avnorm(f, a, b), ref, 1e-13 * ref);
  }
  EXPECT_DOUBLE_EQ(avnorm(f, INFINITY, b), oracle::mean_power(cell_values(f, b.cells), INFINITY));
}

TEST(Avnorm, NondecreasingInExponent) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ud(0, 3);
  const auto g = GridDomain::centered(2, 1.0, 1.0 / 8);
  ScalarField f(g.size());
  for (Index c = 0; c < g.size(); ++c) f(c) = ud(rng);
  const auto b = ball_membership(QuasimetricSpace::euclidean(), g, origin2(), 0.9);
  double prev = 0;
  for (double a = 0.5; a < 300; a *= 1.7) {
    const double v = avnorm(f, a, b);
    EXPECT_GE(v, prev * (1 - 1e-14));
    prev = v;
  }
  EXPECT_LE(prev, f.maxCoeff());
}

TEST(Avnorm, LargeExponentDoesNotOverflow) {
  const auto g = GridDomain::centered(1, 1.0, 0.25);
  ScalarField f = ScalarField::Constant(g.size(), 1e200);
  const auto b = ball_membership(QuasimetricSpace::euclidean(), g, Point::Zero(1), 0.6);
  EXPECT_NEAR(avnorm(f, 50, b) / 1e200, 1, 1e-13);
}

TEST(LpNorm, EqualsAverageTimesMeasure) {
  const auto g = GridDomain::centered(2, 1.0, 1.0 / 8);
  const ScalarField f = g.sample([](const Point& x) { return std::exp(x(0)); });
  const auto b = ball_membership(QuasimetricSpace::euclidean(), g, origin2(), 0.5);
  const double ref = oracle::sum_power(cell_values(f, b.cells), 3, g.cell_volume());
  EXPECT_NEAR(lp_norm(f, 3, b.cells, g), ref, 1e-13 * ref);
}

TEST(WqpNorm, LinearFunctionOnIdentityForm) {
  const auto g = GridDomain::centered(2, 1.0, 0.25);
  const ScalarField f = ScalarField::Constant(g.size(), 2.0);
  VectorField v = VectorField::Zero(2, g.size());
  v.row(0).setConstant(1.0);
  const FormSamples Q(QuadraticFormField::identity(2), g);
  // (sum 2^2 h^2 + sum 1 h^2)^{1/2} with 81 cells of area 1/16
  EXPECT_NEAR(wqp_norm({f, v}, Q, g, 2), std::sqrt(5.0 * 81 / 16), 1e-13);
}

TEST(FormLengths, GrushinKillsVerticalOnAxis) {
  const auto g = GridDomain::centered(2, 1.0, 0.25);
  const FormSamples Q(QuadraticFormField::grushin(2), g);
  VectorField v = VectorField::Zero(2, g.size());
  v.row(1).setConstant(1.0);
  const ScalarField L = form_lengths(v, Q, g);
  for (Index c = 0; c < g.size(); ++c) EXPECT_NEAR(L(c), std::abs(g.center(c)(0)), 1e-14);
}

TEST(Cutoffs, NestedAndBounded) {
  const auto g = GridDomain::centered(2, 1.0, 1.0 / 32);
  const auto b = ball_membership(QuasimetricSpace::euclidean(), g, origin2(), 0.5);
  const FormSamples Q(QuadraticFormField::identity(2), g);
  const auto cs = cutoff_sequence(b, 0.5, 6, Q, g);
  ASSERT_EQ(cs.etas.size(), 7u);
  for (std::size_t j = 0; j + 1 < cs.etas.size(); ++j) {
    EXPECT_GE(cs.etas[j].minCoeff(), 0);
    EXPECT_LE(cs.etas[j].maxCoeff(), 1);
    // eta_{j+1} = 1 only where eta_j = 1
    for (Index c = 0; c < g.size(); ++c)
      if (cs.etas[j + 1](c) > 0) EXPECT_EQ(cs.etas[j](c), 1.0);
  }
  for (std::size_t j = 1; j < cs.radii.size(); ++j) EXPECT_LT(cs.radii[j], cs.radii[j - 1]);
  EXPECT_NEAR(cs.radii.back(), 0.25 + 0.25 * std::pow(2, 1 - double(cs.radii.size())), 1e-15);
  EXPECT_TRUE(std::isfinite(cs.Csstar));
}

TEST(TestFunctionsProps, BoundsHoldAcrossParameters) {
  std::vector<double> ts;
  for (double t = -5; t <= 5; t += 0.013) ts.push_back(t);
  for (double q : {1.0, 1.5, 3.0})
    for (double k : {0.0, 0.2, 1.0}) {
      const auto tf = build_F_G(k, q, k + 2, 2, 3);
      EXPECT_TRUE(tf.satisfies_bounds(ts)) << "q=" << q << " k=" << k;
      EXPECT_NEAR(tf.G(0), 0, 1e-12);
    }
}

TEST(TestFunctionsProps, DerivativeMatchesDifferenceQuotient) {
  const auto tf = build_F_G(0.3, 1.7, 1.9, 2, 3);
  for (double t : {-2.0, -0.7, 0.4, 1.1, 3.0}) {
    const double e = 1e-6;
    EXPECT_NEAR(tf.dG(t), (tf.G(t + e) - tf.G(t - e)) / (2 * e), 1e-5 * (1 + std::abs(tf.dG(t))));
  }
}

TEST(TestFunctionsProps, RejectsBadParameters) {
  EXPECT_THROW(build_F_G(1, 2, 0.5, 2, 3), Error);
  EXPECT_THROW(build_F_G(0, 0.5, 1, 2, 3), Error);
}

TEST(Truncation, ContinuousAndLinearBeyondLevel) {
  const auto t = build_H_trunc(2, 1, 1.5, 2);
  EXPECT_NEAR(t.H(1.5 + 1e-12), t.H(1.5), 1e-10);
  EXPECT_NEAR(t.dH(3) , t.dH(5), 0);
  EXPECT_NEAR(t.derivative_bound(), t.m * std::pow(1.5, t.m - 1), 1e-14);
  EXPECT_DOUBLE_EQ(t.H(-2), -t.H(2));
}

TEST(AbsShift, FormLengthInvariant) {
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  const auto g = GridDomain::centered(2, 1.0, 0.125);
  ScalarField w(g.size());
  VectorField v(2, g.size());
  for (Index c = 0; c < g.size(); ++c) {
    w(c) = nd(rng);
    v(0, c) = nd(rng);
    v(1, c) = nd(rng);
  }
  const FormSamples Q(QuadraticFormField::grushin(2), g);
  const auto s = abs_shift({w, v}, 0.4);
  EXPECT_EQ(form_lengths(s.v, Q, g), form_lengths(v, Q, g));
  EXPECT_EQ(s.w, (w.cwiseAbs().array() + 0.4).matrix());
}

TEST(ApplyG, GradientMatchesDifferenceOfValues) {
  const auto g = GridDomain::centered(2, 1.0, 1.0 / 64);
  const auto u = pair_from_values(g.sample([](const Point& x) { return 0.3 + 0.5 * std::sin(x(0)) + 0.2 * x(1); }), g);
  const auto tf = build_F_G(0.1, 1.5, 10, 2, 3);
  const auto out = apply_G(u, tf, g);
  const VectorField fd = centered_gradient(out.w, g);
  double err = 0, ref = 0;
  for (Index c = 0; c < g.size(); ++c) {
    if (g.is_boundary(c)) continue;
    err += (fd.col(c) - out.v.col(c)).squaredNorm();
    ref += out.v.col(c).squaredNorm();
  }
  EXPECT_LT(std::sqrt(err / ref), 1e-2);
}

TEST(ProductWithCutoff, LeibnizRule) {
  const auto g = GridDomain::centered(2, 1.0, 0.25);
  const ScalarField eta = g.sample([](const Point& x) { return std::pow(std::max(0.0, 1 - 4 * x.squaredNorm()), 2); });
  const auto w = pair_from_values(g.sample([](const Point& x) { return x(0); }), g);
  const auto out = product_with_cutoff(eta, 2, w, g);
  const VectorField ge = centered_gradient(eta, g);
  for (Index c = 0; c < g.size(); ++c) {
    EXPECT_NEAR(out.w(c), eta(c) * eta(c) * w.w(c), 1e-15);
    const Eigen::Vector2d expect = 2 * eta(c) * w.w(c) * ge.col(c) + eta(c) * eta(c) * w.v.col(c);
    EXPECT_LT((out.v.col(c) - expect).norm(), 1e-14);
  }
}

TEST(GoodLevels, AvoidAttainedValues) {
  const auto g = GridDomain::centered(1, 1.0, 0.25);
  const ScalarField f = g.sample([](const Point& x) { return 1 + x(0); });
  const auto lv = pick_good_levels({f}, 4, g);
  ASSERT_EQ(lv.size(), 4u);
  for (std::size_t i = 0; i < lv.size(); ++i) {
    if (i) EXPECT_GT(lv[i], lv[i - 1]);
    for (Index c = 0; c < g.size(); ++c) EXPECT_NE(lv[i], f(c));
  }
}

TEST(Sobolev, EuclideanConstantFinite) {
  const auto g = GridDomain::centered(2, 1.0, 1.0 / 16);
  const FormSamples Q(QuadraticFormField::identity(2), g);
  const auto res = verify_sobolev(Q, QuasimetricSpace::euclidean(), g, 2, 2, {{origin2(), 0.5, 0}});
  EXPECT_GT(res.evaluated, 0);
  EXPECT_TRUE(std::isfinite(res.C));
  EXPECT_GT(res.C, 0);
}

TEST(Morrey, ConstantFieldScalesWithRadius) {
  const auto g = GridDomain::centered(2, 1.0, 1.0 / 16);
  const ScalarField m = ScalarField::Constant(g.size(), 2.0);
  const auto res = morrey_norm(m, 1.0, 2.0, QuasimetricSpace::euclidean(), g,
                               {{origin2(), 0.2, 0}, {origin2(), 0.4, 0}});
  EXPECT_NEAR(res.value, 0.8, 1e-14);
  EXPECT_EQ(res.rows.size(), 2u);
}

TEST(HigherIntegrability, RatioFinite) {
  const auto g = GridDomain::centered(2, 1.0, 1.0 / 16);
  const FormSamples Q(QuadraticFormField::identity(2), g);
  const auto u = pair_from_values(g.sample([](const Point& x) { return x(0); }), g);
  const auto b = ball_membership(QuasimetricSpace::euclidean(), g, origin2(), 0.5);
  const auto r = higher_integrability(u, b, 0.5, Q, g, 2, 3);
  EXPECT_GT(r.lpsigma_norm, 0);
  EXPECT_TRUE(std::isfinite(r.ratio));
}
