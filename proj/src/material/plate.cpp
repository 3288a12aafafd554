#include "platelab/material/plate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "platelab/core/errors.hpp"

namespace platelab::material {

YoungPoisson young_poisson(double lambda, double mu) {
  if (mu + lambda == 0.0) throw SingularModuliError("young_poisson: mu + lambda = 0");
  if (!(mu > 0.0) || !(mu + lambda > 0.0)) {
    throw InvalidInputError("young_poisson: requires mu > 0 and mu + lambda > 0");
  }
  return {mu * (2.0 * mu + 3.0 * lambda) / (mu + lambda), lambda / (2.0 * (mu + lambda))};
}

double bending_stiffness(double E, double nu, double h) {
  if (nu * nu == 1.0) throw SingularModuliError("bending_stiffness: nu^2 = 1");
  if (!(std::abs(nu) < 1.0)) throw InvalidInputError("bending_stiffness: requires |nu| < 1");
  if (!(h > 0.0)) throw InvalidInputError("bending_stiffness: requires h > 0");
  return h * h * h / 12.0 * E / (1.0 - nu * nu);
}

Mat2 plate_tensor_apply(double B, double nu, const Mat2& A) {
  const Mat2 sym = 0.5 * (A + A.transpose());
  return B * ((1.0 - nu) * sym + nu * A.trace() * Mat2::Identity());
}

double tensor_quadratic_form(double B, double nu, const Mat2& A) {
  const double tr = A.trace();
  return B * ((1.0 - nu) * A.squaredNorm() + nu * tr * tr);
}

CoefficientField::CoefficientField(Expression expr) {
  // Build d^(a+b) from d^(a-1, b) or d^(a, b-1).
  partials_[slot(0, 0)] = std::move(expr);
  for (int order = 1; order <= kMaxOrder; ++order) {
    for (int a = order; a >= 0; --a) {
      const int b = order - a;
      partials_[slot(a, b)] = a > 0 ? partials_[slot(a - 1, b)].derivative(0) : partials_[slot(a, b - 1)].derivative(1);
    }
  }
}

int CoefficientField::slot(int a, int b) {
  const int order = a + b;
  return order * (order + 1) / 2 + b;
}

double CoefficientField::partial(int a, int b, const Vec2& x) const {
  if (a < 0 || b < 0 || a + b > kMaxOrder) throw InvalidInputError("coefficient field: derivative order out of range");
  return partials_[slot(a, b)].evaluate(x.x(), x.y());
}

IsotropicPlate::IsotropicPlate(Expression lambda, Expression mu, double thickness, double alpha0, double gamma0,
                               double Lambda0)
    : lambda_(std::move(lambda)), mu_(std::move(mu)), h_(thickness), alpha0_(alpha0), gamma0_(gamma0), Lambda0_(Lambda0) {
  if (!(h_ > 0.0)) throw InvalidInputError("plate: thickness must be positive");
  if (!(alpha0_ > 0.0) || !(gamma0_ > 0.0)) throw InvalidInputError("plate: alpha0 and gamma0 must be positive");
  if (!(Lambda0_ > 0.0)) throw InvalidInputError("plate: Lambda0 must be positive");
}

IsotropicPlate IsotropicPlate::constant(double lambda, double mu, double thickness) {
  return IsotropicPlate(Expression::constant(lambda), Expression::constant(mu), thickness);
}

PlateTensorSample IsotropicPlate::sample(const Vec2& x) const {
  const auto yp = young_poisson(lambda_.value(x), mu_.value(x));
  PlateTensorSample s;
  s.E = yp.E;
  s.nu = yp.nu;
  s.B = bending_stiffness(yp.E, yp.nu, h_);
  s.point = x;
  return s;
}

ConvexityReport check_convexity(const IsotropicPlate& plate, std::span<const Vec2> points, double grid_step) {
  ConvexityReport r;
  r.alpha0 = plate.alpha0();
  r.gamma0 = plate.gamma0();
  r.grid_step = grid_step;
  r.samples = points.size();
  r.min_mu = std::numeric_limits<double>::infinity();
  r.min_two_mu_three_lambda = std::numeric_limits<double>::infinity();
  for (const auto& x : points) {
    const double mu = plate.mu_field().value(x);
    const double la = plate.lambda_field().value(x);
    r.min_mu = std::min(r.min_mu, mu);
    r.min_two_mu_three_lambda = std::min(r.min_two_mu_three_lambda, 2.0 * mu + 3.0 * la);
  }
  r.mu_ok = r.min_mu >= r.alpha0;
  r.lame_ok = r.min_two_mu_three_lambda >= r.gamma0;
  return r;
}

RegularityReport check_regularity(const IsotropicPlate& plate, std::span<const Vec2> points, double grid_step) {
  RegularityReport r;
  r.Lambda0 = plate.Lambda0();
  r.grid_step = grid_step;
  for (const auto& x : points) {
    for (int order = 0; order <= CoefficientField::kMaxOrder; ++order) {
      for (int a = 0; a <= order; ++a) {
        r.max_norm = std::max({r.max_norm, std::abs(plate.lambda_field().partial(a, order - a, x)),
                               std::abs(plate.mu_field().partial(a, order - a, x))});
      }
    }
  }
  r.passed = r.max_norm <= r.Lambda0;
  return r;
}

double coercivity_constant(const IsotropicPlate& plate, std::span<const Vec2> points) {
  double c = std::numeric_limits<double>::infinity();
  for (const auto& x : points) {
    const auto s = plate.sample(x);
    c = std::min(c, s.B * std::min(1.0 - s.nu, 1.0 + s.nu));
  }
  return c;
}

IsotropicPlate material_from_document(const KeyValueDocument& doc) {
  try {
    return IsotropicPlate(Expression::parse(doc.get_string("lambda")), Expression::parse(doc.get_string("mu")),
                          doc.get_double("thickness"), doc.get_double("alpha0", 0.5), doc.get_double("gamma0", 0.5),
                          doc.get_double("Lambda0", 1.0e3));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(doc.source() + ": " + e.what());
  }
}

IsotropicPlate load_material(const std::filesystem::path& path) {
  return material_from_document(KeyValueDocument::load(path));
}

KeyValueDocument material_to_document(const IsotropicPlate& plate) {
  KeyValueDocument doc;
  doc.set("lambda", plate.lambda_field().expression().to_string());
  doc.set("mu", plate.mu_field().expression().to_string());
  doc.set("thickness", plate.thickness());
  doc.set("alpha0", plate.alpha0());
  doc.set("gamma0", plate.gamma0());
  doc.set("Lambda0", plate.Lambda0());
  return doc;
}

}  // namespace platelab::material
