#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <span>
#include <string>

#include "platelab/core/keyvalue.hpp"
#include "platelab/material/expression.hpp"

namespace platelab::material {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct YoungPoisson {
  double E = 0.0;
  double nu = 0.0;
};

YoungPoisson young_poisson(double lambda, double mu);
double bending_stiffness(double E, double nu, double h);
// B [(1 - nu) sym(A) + nu tr(A) I]
Mat2 plate_tensor_apply(double B, double nu, const Mat2& A);
// plate_tensor_apply(B, nu, A) : A for symmetric A.
double tensor_quadratic_form(double B, double nu, const Mat2& A);

// A coefficient field with all partial derivatives of order <= 4 prepared.
class CoefficientField {
 public:
  static constexpr int kMaxOrder = 4;

  CoefficientField() : CoefficientField(Expression::constant(0.0)) {}
  explicit CoefficientField(Expression expr);

  double value(const Vec2& x) const { return partials_[0].evaluate(x.x(), x.y()); }
  // d^(a+b) / dx1^a dx2^b, a + b <= 4.
  double partial(int a, int b, const Vec2& x) const;
  const Expression& expression() const { return partials_[0]; }
  bool is_constant() const { return partials_[0].is_constant(); }

 private:
  static int slot(int a, int b);
  std::array<Expression, 15> partials_;
};

struct PlateTensorSample {
  double B = 0.0;
  double nu = 0.0;
  double E = 0.0;
  Vec2 point = Vec2::Zero();
};

class IsotropicPlate {
 public:
  IsotropicPlate(Expression lambda, Expression mu, double thickness, double alpha0 = 0.5, double gamma0 = 0.5,
                 double Lambda0 = 1.0e3);
  static IsotropicPlate constant(double lambda, double mu, double thickness);

  const CoefficientField& lambda_field() const { return lambda_; }
  const CoefficientField& mu_field() const { return mu_; }
  double thickness() const { return h_; }
  double alpha0() const { return alpha0_; }
  double gamma0() const { return gamma0_; }
  double Lambda0() const { return Lambda0_; }
  bool is_constant() const { return lambda_.is_constant() && mu_.is_constant(); }

  PlateTensorSample sample(const Vec2& x) const;

 private:
  CoefficientField lambda_, mu_;
  double h_, alpha0_, gamma0_, Lambda0_;
};

struct ConvexityReport {
  double min_mu = 0.0;
  double min_two_mu_three_lambda = 0.0;
  double alpha0 = 0.0;
  double gamma0 = 0.0;
  bool mu_ok = false;
  bool lame_ok = false;
  double grid_step = 0.0;
  std::size_t samples = 0;
  bool passed() const { return mu_ok && lame_ok; }
};

ConvexityReport check_convexity(const IsotropicPlate& plate, std::span<const Vec2> points, double grid_step);

struct RegularityReport {
  double max_norm = 0.0;  // max over samples and |beta| <= 4 of |d^beta lambda|, |d^beta mu|
  double Lambda0 = 0.0;
  bool passed = false;
  double grid_step = 0.0;
};

RegularityReport check_regularity(const IsotropicPlate& plate, std::span<const Vec2> points, double grid_step);

// Lower bound c with P A : A >= c |A|^2 for symmetric A: min over points of B min(1 - nu, 1 + nu).
double coercivity_constant(const IsotropicPlate& plate, std::span<const Vec2> points);

IsotropicPlate material_from_document(const KeyValueDocument& doc);
IsotropicPlate load_material(const std::filesystem::path& path);
KeyValueDocument material_to_document(const IsotropicPlate& plate);

}  // namespace platelab::material
