#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "platelab/core/errors.hpp"
#include "platelab/material/plate.hpp"

using namespace platelab;
using namespace platelab::material;

TEST(YoungPoisson, Examples) {
  auto r = young_poisson(1, 1);
  EXPECT_DOUBLE_EQ(r.E, 2.5);
  EXPECT_DOUBLE_EQ(r.nu, 0.25);
  r = young_poisson(0, 1);
  EXPECT_DOUBLE_EQ(r.E, 2.0);
  EXPECT_DOUBLE_EQ(r.nu, 0.0);
  r = young_poisson(2, 1);
  EXPECT_NEAR(r.E, 8.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.nu, 1.0 / 3.0, 1e-15);
  EXPECT_THROW(young_poisson(-1, 1), SingularModuliError);
}

TEST(YoungPoisson, RoundTripAndPoissonBound) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mu_d(0.1, 10.0), t(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double mu = mu_d(rng);
    // 2 mu + 3 lambda > 0 and mu + lambda > 0.
    const double lambda = -2.0 * mu / 3.0 + t(rng) * 10.0 + 1e-9;
    const auto r = young_poisson(lambda, mu);
    EXPECT_NEAR(r.E / (2.0 * (1.0 + r.nu)), mu, 1e-12 * mu);
    EXPECT_LT(r.nu, 0.5);
    EXPECT_GT(r.nu, -1.0);
  }
}

TEST(BendingStiffness, Examples) {
  EXPECT_DOUBLE_EQ(bending_stiffness(12, 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(bending_stiffness(12, 0, 2), 8.0);
  EXPECT_DOUBLE_EQ(bending_stiffness(0, 0.3, 1), 0.0);
  EXPECT_THROW(bending_stiffness(1, 1.0, 1), SingularModuliError);
  EXPECT_THROW(bending_stiffness(1, 0.3, 0.0), InvalidInputError);
}

TEST(PlateTensor, Examples) {
  const Mat2 I = Mat2::Identity();
  EXPECT_TRUE(plate_tensor_apply(1, 0.25, I).isApprox(1.25 * I, 1e-15));
  Mat2 anti;
  anti << 0, 2, -2, 0;
  EXPECT_EQ(plate_tensor_apply(1, 0.3, anti).norm(), 0.0);
  Mat2 a;
  a << 1, 2, 4, -3;
  EXPECT_TRUE(plate_tensor_apply(2, 0, a).isApprox(a + a.transpose(), 1e-15));
}

TEST(PlateTensor, SymmetricOutputAndQuadraticForm) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  for (int i = 0; i < 200; ++i) {
    Mat2 a;
    a << n(rng), n(rng), n(rng), n(rng);
    const double B = std::abs(n(rng)) + 0.1;
    const double nu = 0.4 * std::tanh(n(rng));
    const Mat2 p = plate_tensor_apply(B, nu, a);
    EXPECT_NEAR(p(0, 1), p(1, 0), 1e-14);
    const Mat2 s = 0.5 * (a + a.transpose());
    EXPECT_NEAR(tensor_quadratic_form(B, nu, s), (plate_tensor_apply(B, nu, s).cwiseProduct(s)).sum(), 1e-12);
    EXPECT_GE(tensor_quadratic_form(B, nu, s), B * std::min(1 - nu, 1 + nu) * s.squaredNorm() - 1e-12);
  }
  EXPECT_DOUBLE_EQ(tensor_quadratic_form(1, 0, Mat2::Identity()), 2.0);
  EXPECT_DOUBLE_EQ(tensor_quadratic_form(1, 0.25, Mat2::Identity()), 2.5);
  EXPECT_DOUBLE_EQ(tensor_quadratic_form(1, 0.25, Mat2::Zero()), 0.0);
}

TEST(Expression, ParseEvaluateAndPrint) {
  const auto e = Expression::parse("1 + 0.2*sin(pi*x1) - x2^2/4 + exp(-x1*x2) * cos(2*x2)");
  auto f = [](double x, double y) {
    return 1 + 0.2 * std::sin(std::numbers::pi * x) - y * y / 4 + std::exp(-x * y) * std::cos(2 * y);
  };
  for (double x : {-1.0, 0.3, 2.0})
    for (double y : {-0.5, 0.0, 1.7}) EXPECT_NEAR(e.evaluate(x, y), f(x, y), 1e-14);
  const auto again = Expression::parse(e.to_string());
  EXPECT_NEAR(again.evaluate(0.37, -1.1), f(0.37, -1.1), 1e-14);
  EXPECT_TRUE(Expression::parse("2*pi - 1").is_constant());
  EXPECT_THROW(Expression::parse("1 + "), ConfigError);
  EXPECT_THROW(Expression::parse("tan(x1)"), ConfigError);
  EXPECT_THROW(Expression::parse("x1^x2"), ConfigError);
}

TEST(Expression, FourthDerivativesMatchAnalyticForms) {
  const CoefficientField f(Expression::parse("1 + 0.2*sin(pi*x1) + x1^3*x2^2 + exp(0.5*x2)"));
  const double pi = std::numbers::pi;
  const Vec2 x(0.4, -0.7);
  EXPECT_NEAR(f.partial(4, 0, x), 0.2 * std::pow(pi, 4) * std::sin(pi * 0.4), 1e-12);
  EXPECT_NEAR(f.partial(3, 1, x), 6 * 2 * (-0.7), 1e-12);
  EXPECT_NEAR(f.partial(2, 2, x), 6 * 0.4 * 2, 1e-12);
  EXPECT_NEAR(f.partial(0, 4, x), 0.0625 * std::exp(0.5 * -0.7), 1e-12);
  EXPECT_NEAR(f.partial(1, 0, x), 0.2 * pi * std::cos(pi * 0.4) + 3 * 0.16 * 0.49, 1e-12);
  EXPECT_THROW(f.partial(3, 2, x), InvalidInputError);
  // Division rule against a centred finite-difference oracle.
  const CoefficientField g(Expression::parse("x1 / (2 + x2^2)"));
  const double eps = 1e-5;
  const double fd = (g.value(Vec2(0.3, 0.5 + eps)) - g.value(Vec2(0.3, 0.5 - eps))) / (2 * eps);
  EXPECT_NEAR(g.partial(0, 1, Vec2(0.3, 0.5)), fd, 1e-9);
}

TEST(Convexity, Examples) {
  std::vector<Vec2> pts;
  for (int i = -10; i <= 10; ++i)
    for (int j = -10; j <= 10; ++j) pts.emplace_back(0.1 * i, 0.1 * j);
  auto r = check_convexity(IsotropicPlate::constant(1, 1, 0.1), pts, 0.1);
  EXPECT_TRUE(r.passed());
  EXPECT_DOUBLE_EQ(r.min_mu, 1.0);
  EXPECT_DOUBLE_EQ(r.min_two_mu_three_lambda, 5.0);

  const IsotropicPlate bad(Expression::constant(1), Expression::parse("x1"), 0.1);
  EXPECT_FALSE(check_convexity(bad, pts, 0.1).passed());

  const IsotropicPlate neg(Expression::constant(-0.5), Expression::constant(1), 0.1, 0.5, 0.4);
  r = check_convexity(neg, pts, 0.1);
  EXPECT_TRUE(r.passed());
  EXPECT_DOUBLE_EQ(r.min_two_mu_three_lambda, 0.5);
}

TEST(Regularity, ExactSampledNorm) {
  std::vector<Vec2> pts{Vec2(0.5, 0.0), Vec2(0.0, 0.0)};
  const IsotropicPlate p(Expression::constant(1), Expression::parse("1 + 0.2*sin(pi*x1)"), 0.1, 0.5, 0.5, 100);
  const auto r = check_regularity(p, pts, 0.5);
  EXPECT_NEAR(r.max_norm, 0.2 * std::pow(std::numbers::pi, 4), 1e-10);
  EXPECT_TRUE(r.passed);
  const IsotropicPlate q(Expression::constant(1), Expression::parse("1 + 0.2*sin(pi*x1)"), 0.1, 0.5, 0.5, 10);
  EXPECT_FALSE(check_regularity(q, pts, 0.5).passed);
}

TEST(MaterialFile, RoundTripAndErrors) {
  const auto doc = KeyValueDocument::parse("lambda = 1\nmu = 1 + 0.2*sin(pi*x1)\nthickness = 0.1\n");
  const auto p = material_from_document(doc);
  EXPECT_NEAR(p.sample(Vec2(0.5, 0)).nu, 1.0 / (2 * 2.2), 1e-14);
  const auto p2 = material_from_document(KeyValueDocument::parse(material_to_document(p).serialize()));
  EXPECT_NEAR(p2.mu_field().value(Vec2(0.3, 0.1)), p.mu_field().value(Vec2(0.3, 0.1)), 1e-15);
  EXPECT_THROW(material_from_document(KeyValueDocument::parse("lambda = 1\nmu = 1\n")), ConfigError);
  EXPECT_THROW(material_from_document(KeyValueDocument::parse("lambda = 1\nmu = 1\nthickness = -1\n")), ConfigError);
}

TEST(PlateSample, BendingStiffnessForDefaults) {
  const auto s = IsotropicPlate::constant(1, 1, 0.1).sample(Vec2::Zero());
  EXPECT_NEAR(s.B, 1e-3 / 12 * 2.5 / (1 - 0.0625), 1e-16);
}
