#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "degen/errors.hpp"
#include "degen/operators.hpp"
#include "degen/structural.hpp"

using namespace degen;

namespace {

GridDomain small_grid() { return GridDomain::centered(2, 1.0, 0.25); }

std::vector<Index> all_cells(const GridDomain& g) { return g.masked_cells(); }

LinearData random_linear(std::mt19937& rng, int n) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.1, 0.9);
  LinearData d;
  d.H = Eigen::VectorXd::NullaryExpr(n, [&] { return nd(rng); });
  d.G = Eigen::VectorXd::NullaryExpr(n, [&] { return nd(rng); });
  d.g = Eigen::VectorXd::NullaryExpr(n, [&] { return nd(rng); });
  d.F = std::abs(nd(rng));
  d.f = nd(rng);
  auto rows = [&] {
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd r = Eigen::VectorXd::NullaryExpr(n, [&] { return nd(rng); });
      M.row(i) = ud(rng) * r.normalized().transpose();
    }
    return M;
  };
  d.R = rows();
  d.S = rows();
  d.T = rows();
  return d;
}

}  // namespace

TEST(Ranges, OpenIntervals) {
  const auto r = check_ranges(2, 3, 2, 2, 2);
  EXPECT_TRUE(r.ok);
  EXPECT_DOUBLE_EQ(r.gamma_max, 4);
  EXPECT_DOUBLE_EQ(r.psi_max, 3 - 1.0 / 3);
  EXPECT_DOUBLE_EQ(r.delta_max, 6);
  EXPECT_FALSE(check_ranges(2, 3, 4, 2, 2).gamma_ok);
  EXPECT_FALSE(check_ranges(2, 3, 2, 1, 2).psi_ok);
  EXPECT_FALSE(check_ranges(2, 3, 2, 2, 6).delta_ok);
}

TEST(DualExponent, EndpointsSwap) {
  EXPECT_TRUE(std::isinf(dual_exponent(1)));
  EXPECT_EQ(dual_exponent(INFINITY), 1);
  EXPECT_DOUBLE_EQ(dual_exponent(3), 1.5);
}

TEST(Integrability, TableForQuadraticCase) {
  const auto t = required_integrability(2, 3, 2, 2, 2);
  EXPECT_DOUBLE_EQ(t.c, 6.0 / 2);
  EXPECT_DOUBLE_EQ(t.e, 2);
  EXPECT_DOUBLE_EQ(t.f, 6.0 / 5);
  EXPECT_DOUBLE_EQ(t.b, 6.0 / 2);
  EXPECT_DOUBLE_EQ(t.d, 6.0 / 4);
  EXPECT_THROW(required_integrability(2, 3, 5, 2, 2), Error);
}

TEST(CoefficientField, ArithmeticAndQueries) {
  const auto g = small_grid();
  const auto a = CoefficientField::constant(2) + CoefficientField::cells(ScalarField::LinSpaced(g.size(), 0, 1));
  EXPECT_FALSE(a.is_constant());
  EXPECT_DOUBLE_EQ(a.sup_on(all_cells(g)), 3);
  EXPECT_TRUE(CoefficientField::constant(0).vanishes_on(all_cells(g)));
  EXPECT_DOUBLE_EQ((CoefficientField::constant(2) * 1.5).constant_value(), 3);
}

TEST(Bars, ExpandShift) {
  StructuralCoefficients s;
  s.p = 3;
  s.b = CoefficientField::constant(1);
  s.e = CoefficientField::constant(8);
  s.h = CoefficientField::constant(0.5);
  s.g = CoefficientField::constant(16);
  s.d = CoefficientField::constant(0);
  s.f = CoefficientField::constant(4);
  const auto b = bar_coefficients(s, 2);
  EXPECT_DOUBLE_EQ(b.bbar.constant_value(), 1 + 8.0 / 4);
  EXPECT_DOUBLE_EQ(b.hbar.constant_value(), 0.5 + 16.0 / 8);
  EXPECT_DOUBLE_EQ(b.dbar.constant_value(), 4.0 / 4);
  try {
    bar_coefficients(s, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonpositiveK);
  }
}

TEST(Bundle, PowersOfSolution) {
  const auto g = small_grid();
  StructuralCoefficients s;
  s.p = 2;
  s.gamma = 3;
  s.delta = 2.5;
  s.b = CoefficientField::constant(2);
  s.h = CoefficientField::constant(1);
  s.d = CoefficientField::constant(3);
  const ScalarField u = g.sample([](const Point& x) { return x(0) - 0.1; });
  const auto bc = bundle_coefficients(s, u, g);
  for (Index c = 0; c < g.size(); ++c) {
    EXPECT_NEAR(bc.bstar(c), 2 * std::abs(u(c)), 1e-15);
    EXPECT_NEAR(bc.hstar(c), std::abs(u(c)), 1e-15);
    EXPECT_NEAR(bc.dstar(c), 3 * std::sqrt(std::abs(u(c))), 1e-15);
  }
}

TEST(ReduceBelowP, Folds) {
  StructuralCoefficients s;
  s.gamma = s.psi = s.delta = 1.5;
  s.b = CoefficientField::constant(1);
  s.c = CoefficientField::constant(2);
  s.d = CoefficientField::constant(3);
  s.e = CoefficientField::constant(4);
  s.f = CoefficientField::constant(5);
  s.g = CoefficientField::constant(6);
  s.h = CoefficientField::constant(7);
  const auto r = reduce_below_p(s);
  EXPECT_DOUBLE_EQ(r.e.constant_value(), 5);
  EXPECT_DOUBLE_EQ(r.g.constant_value(), 13);
  EXPECT_DOUBLE_EQ(r.f.constant_value(), 10);
}

class PLaplacianStructure : public ::testing::TestWithParam<double> {};

TEST_P(PLaplacianStructure, RoundTripHasNoViolations) {
  const double p = GetParam();
  const auto g = small_grid();
  for (const auto& Q : {QuadraticFormField::identity(2), QuadraticFormField::grushin(2)}) {
    const auto op = p_laplacian(Q, p);
    const auto samples = full_samples(g, all_cells(g), 8);
    const auto r = check_struct(op.op, op.coeffs, Q, g, samples);
    EXPECT_TRUE(r.ok()) << Q.name() << " p=" << p;
    EXPECT_GT(r.checked, 0u);
    const auto op3 = struct_to_struct3(op.op);
    EXPECT_TRUE(check_struct3(op3, op.coeffs, Q, g, samples).ok());
    const auto back = struct3_to_struct(op3, Q);
    EXPECT_TRUE(check_struct(back, op.coeffs, Q, g, samples).ok());
  }
}

INSTANTIATE_TEST_SUITE_P(Exponents, PLaplacianStructure, ::testing::Values(1.5, 2.0, 3.0));

TEST(LinearStructure, RandomDataPasses) {
  std::mt19937 rng(21);
  const auto g = small_grid();
  for (int trial = 0; trial < 5; ++trial) {
    const auto d = random_linear(rng, 2);
    for (const auto& Q : {QuadraticFormField::identity(2), QuadraticFormField::grushin(2)}) {
      const auto op = linear_divergence(Q, d);
      const auto r = check_struct(op.op, op.coeffs, Q, g, full_samples(g, all_cells(g), 8));
      EXPECT_TRUE(r.ok()) << "trial " << trial << " " << Q.name();
      EXPECT_DOUBLE_EQ(op.coeffs.a, 2);
    }
  }
}

TEST(YamabeStructure, Passes) {
  const auto g = small_grid();
  const auto Q = QuadraticFormField::identity(2);
  const auto op = yamabe_type(Q, 0.5, 1.0, 3);
  EXPECT_TRUE(check_struct(op.op, op.coeffs, Q, g, full_samples(g, all_cells(g), 8)).ok());
}

TEST(Structure, ShrunkCoefficientIsCaught) {
  const auto g = small_grid();
  const auto Q = QuadraticFormField::identity(2);
  auto op = p_laplacian(Q, 2);
  op.coeffs.a = 0.5;
  const auto r = check_struct(op.op, op.coeffs, Q, g, full_samples(g, all_cells(g), 8));
  ASSERT_FALSE(r.ok());
  // the growth bound on A~ carries a
  EXPECT_EQ(r.violations.front().condition, "iii");
}

TEST(Structure, KernelComponentRaisesAnotInRange) {
  const auto g = small_grid();
  const auto Q = QuadraticFormField::grushin(2);
  OperatorSampler op;
  op.name = "identity-flux";
  op.A = [](const Point&, double, const Eigen::VectorXd& xi) { return xi; };
  op.B = [](const Point&, double, const Eigen::VectorXd&) { return 0.0; };
  const auto back = struct3_to_struct(op, Q);
  Eigen::VectorXd xi(2);
  xi << 0, 1;
  try {
    back.Atilde(Point::Zero(2), 0, xi);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AnotInRange);
  }
}

TEST(ShiftConstant, VanishesWithoutInhomogeneity) {
  const auto g = small_grid();
  StructuralCoefficients s;
  s.b = CoefficientField::constant(3);
  const auto ball = ball_membership(QuasimetricSpace::euclidean(), g, Point::Zero(2), 0.5);
  EXPECT_EQ(compute_k(s, ball, 1, 1, 3), 0);
}

TEST(TransformStructure, ScalesByEquivalenceConstant) {
  StructuralCoefficients s;
  s.p = 3;
  s.psi = 2;
  s.a = 1;
  s.b = CoefficientField::constant(1);
  s.c = CoefficientField::constant(1);
  s.e = CoefficientField::constant(1);
  const auto t = transform_structure(s, 4);
  EXPECT_DOUBLE_EQ(t.a, 8);
  EXPECT_DOUBLE_EQ(t.b.constant_value(), 2);
  EXPECT_DOUBLE_EQ(t.e.constant_value(), 2);
  EXPECT_DOUBLE_EQ(t.c.constant_value(), 2);
}
