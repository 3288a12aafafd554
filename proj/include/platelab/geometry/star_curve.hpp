#pragma once

#include <Eigen/Core>
#include <memory>
#include <span>
#include <vector>

namespace platelab::geometry {

using Vec2 = Eigen::Vector2d;

class Polyline;

// Closed curve x(theta) = center + r(theta) (cos theta, sin theta) with
// r(theta) = a0 + sum_k (a_k cos k theta + b_k sin k theta).
// Coefficients are stored as (a0, a1, b1, ..., aK, bK).
class StarCurve {
 public:
  StarCurve();
  StarCurve(Vec2 center, std::vector<double> coefficients);
  static StarCurve circle(Vec2 center, double radius);

  const Vec2& center() const { return center_; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  int modes() const { return static_cast<int>((coeffs_.size() - 1) / 2); }

  // d^order r / d theta^order.
  double radius(double theta, int order = 0) const;
  Vec2 point(double theta) const;
  Vec2 derivative(double theta) const;
  double speed(double theta) const { return derivative(theta).norm(); }
  Vec2 outward_normal(double theta) const;
  double curvature(double theta) const;
  double polar_angle(const Vec2& x) const;

  // (|x - c| - r(theta)) / |grad|, negative inside; close to signed distance near the curve.
  double level_set(const Vec2& x) const;
  bool contains(const Vec2& x) const { return level_set(x) < 0.0; }

  double perimeter() const;
  double area() const;
  // Arc-length fraction in [0,1), counterclockwise from theta = 0.
  double theta_at_fraction(double fraction) const;
  double fraction_at_theta(double theta) const;

  // n points at uniform arc-length fractions (j + offset) / n.
  std::vector<Vec2> sample(std::size_t n, double offset = 0.0) const;
  // Closed polyline with arc-length step <= step.
  Polyline polyline(double step) const;

  double min_radius(int samples = 2048) const;
  double max_radius(int samples = 2048) const;

  StarCurve translated(const Vec2& shift) const;
  StarCurve scaled_about_center(double factor) const;

 private:
  struct ArcTable;
  void build_table();

  Vec2 center_ = Vec2::Zero();
  std::vector<double> coeffs_;
  std::shared_ptr<const ArcTable> table_;
};

}  // namespace platelab::geometry
