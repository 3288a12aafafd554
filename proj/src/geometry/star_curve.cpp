#include "platelab/geometry/star_curve.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <unsupported/Eigen/FFT>

#include "platelab/core/errors.hpp"
#include "platelab/core/fourier.hpp"
#include "platelab/geometry/polyline.hpp"

namespace platelab::geometry {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kSpeedSamples = 512;
constexpr int kTableSize = 4096;

double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  return t;
}
}  // namespace

struct StarCurve::ArcTable {
  std::vector<double> s;        // arc length at theta_j = 2 pi j / M, plus closing entry
  std::vector<double> speed;    // |x'(theta_j)|
  double perimeter = 0.0;
};

StarCurve::StarCurve() : StarCurve(Vec2::Zero(), {1.0}) {}

StarCurve::StarCurve(Vec2 center, std::vector<double> coefficients)
    : center_(std::move(center)), coeffs_(std::move(coefficients)) {
  if (coeffs_.empty() || coeffs_.size() % 2 == 0) {
    throw InvalidInputError("star curve: coefficient vector must have odd length (a0, a1, b1, ...)");
  }
  for (double c : coeffs_) {
    if (!std::isfinite(c)) throw InvalidInputError("star curve: non-finite coefficient");
  }
  if (!center_.allFinite()) throw InvalidInputError("star curve: non-finite center");
  if (min_radius() <= 0.0) throw GeometryError("star curve: radius function is not positive");
  build_table();
}

StarCurve StarCurve::circle(Vec2 center, double radius) { return StarCurve(std::move(center), {radius}); }

double StarCurve::radius(double theta, int order) const {
  double r = order == 0 ? coeffs_[0] : 0.0;
  for (int k = 1; k <= modes(); ++k) {
    const double a = coeffs_[2 * k - 1];
    const double b = coeffs_[2 * k];
    const double c = std::cos(k * theta);
    const double s = std::sin(k * theta);
    const double kp = std::pow(static_cast<double>(k), order);
    // d^n/dt^n of (a cos + b sin) cycles through (-a sin + b cos), (-a cos - b sin), ...
    double v = 0.0;
    switch (order % 4) {
      case 0: v = a * c + b * s; break;
      case 1: v = -a * s + b * c; break;
      case 2: v = -a * c - b * s; break;
      default: v = a * s - b * c; break;
    }
    r += kp * v;
  }
  return r;
}

Vec2 StarCurve::point(double theta) const {
  const double r = radius(theta);
  return center_ + r * Vec2(std::cos(theta), std::sin(theta));
}

Vec2 StarCurve::derivative(double theta) const {
  const double r = radius(theta);
  const double dr = radius(theta, 1);
  const Vec2 er(std::cos(theta), std::sin(theta));
  const Vec2 et(-std::sin(theta), std::cos(theta));
  return dr * er + r * et;
}

Vec2 StarCurve::outward_normal(double theta) const {
  const Vec2 t = derivative(theta).normalized();
  return Vec2(t.y(), -t.x());
}

double StarCurve::curvature(double theta) const {
  const double r = radius(theta);
  const double r1 = radius(theta, 1);
  const double r2 = radius(theta, 2);
  return (r * r + 2.0 * r1 * r1 - r * r2) / std::pow(r * r + r1 * r1, 1.5);
}

double StarCurve::polar_angle(const Vec2& x) const {
  const Vec2 d = x - center_;
  return wrap_angle(std::atan2(d.y(), d.x()));
}

double StarCurve::level_set(const Vec2& x) const {
  const Vec2 d = x - center_;
  const double rho = d.norm();
  if (rho == 0.0) return -coeffs_[0];
  const double theta = std::atan2(d.y(), d.x());
  // Divided by |grad(rho - r)| so the value approximates signed distance near the curve.
  const double slope = radius(theta, 1) / rho;
  return (rho - radius(theta)) / std::sqrt(1.0 + slope * slope);
}

void StarCurve::build_table() {
  auto table = std::make_shared<ArcTable>();
  std::vector<double> sp(kSpeedSamples);
  for (int j = 0; j < kSpeedSamples; ++j) sp[j] = speed(kTwoPi * j / kSpeedSamples);
  const auto c = fourier::coefficients(sp);
  const double mean_speed = c[0].real();
  // Periodic part of s(theta) - mean_speed * theta from the speed spectrum.
  std::vector<std::complex<double>> spec(kTableSize, 0.0);
  std::complex<double> offset = 0.0;
  for (int k = 1; k < kSpeedSamples / 2; ++k) {
    const std::complex<double> ik(0.0, static_cast<double>(k));
    const std::complex<double> pos = c[k] / ik;
    const std::complex<double> neg = c[kSpeedSamples - k] / (-ik);
    spec[k] += pos * static_cast<double>(kTableSize);
    spec[kTableSize - k] += neg * static_cast<double>(kTableSize);
    offset += pos + neg;
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> periodic;
  fft.inv(periodic, spec);
  table->s.resize(kTableSize + 1);
  table->speed.resize(kTableSize + 1);
  for (int j = 0; j < kTableSize; ++j) {
    const double theta = kTwoPi * j / kTableSize;
    table->s[j] = mean_speed * theta + (periodic[j] - offset).real();
    table->speed[j] = speed(theta);
  }
  table->perimeter = mean_speed * kTwoPi;
  table->s[kTableSize] = table->perimeter;
  table->speed[kTableSize] = table->speed[0];
  table->s[0] = 0.0;
  table_ = std::move(table);
}

double StarCurve::perimeter() const { return table_->perimeter; }

double StarCurve::area() const {
  // (1/2) int r^2 dtheta, exact for trigonometric polynomials with enough nodes.
  const int n = 8 * (modes() + 1) + 16;
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const double r = radius(kTwoPi * j / n);
    acc += r * r;
  }
  return 0.5 * acc * kTwoPi / n;
}

double StarCurve::theta_at_fraction(double fraction) const {
  double f = fraction - std::floor(fraction);
  const double target = f * table_->perimeter;
  const auto& s = table_->s;
  auto it = std::upper_bound(s.begin(), s.end(), target);
  std::size_t j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - s.begin()) - 1));
  j = std::min<std::size_t>(j, kTableSize - 1);
  const double h = kTwoPi / kTableSize;
  const double s0 = s[j], s1 = s[j + 1];
  const double ds = s1 - s0;
  const double t = ds > 0.0 ? (target - s0) / ds : 0.0;
  // Cubic Hermite interpolation of theta(s) with d theta/ds = 1/speed.
  const double th0 = h * static_cast<double>(j);
  const double th1 = th0 + h;
  const double m0 = ds / table_->speed[j];
  const double m1 = ds / table_->speed[j + 1];
  const double t2 = t * t, t3 = t2 * t;
  double theta = (2 * t3 - 3 * t2 + 1) * th0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * th1 + (t3 - t2) * m1;
  return wrap_angle(theta);
}

double StarCurve::fraction_at_theta(double theta) const {
  const double t = wrap_angle(theta);
  const double h = kTwoPi / kTableSize;
  std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(t / h), kTableSize - 1);
  const double u = (t - h * static_cast<double>(j)) / h;
  const auto& s = table_->s;
  const double m0 = h * table_->speed[j];
  const double m1 = h * table_->speed[j + 1];
  const double u2 = u * u, u3 = u2 * u;
  const double sv = (2 * u3 - 3 * u2 + 1) * s[j] + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * s[j + 1] + (u3 - u2) * m1;
  double f = sv / table_->perimeter;
  return f >= 1.0 ? f - 1.0 : f;
}

std::vector<Vec2> StarCurve::sample(std::size_t n, double offset) const {
  std::vector<Vec2> pts;
  pts.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    pts.push_back(point(theta_at_fraction((static_cast<double>(j) + offset) / static_cast<double>(n))));
  }
  return pts;
}

Polyline StarCurve::polyline(double step) const {
  if (!(step > 0.0)) throw InvalidInputError("star curve: sampling step must be positive");
  const auto n = static_cast<std::size_t>(std::max(16.0, std::ceil(perimeter() / step)));
  return Polyline(sample(n));
}

double StarCurve::min_radius(int samples) const {
  double m = coeffs_[0];
  for (int j = 0; j < samples; ++j) m = std::min(m, radius(kTwoPi * j / samples));
  return m;
}

double StarCurve::max_radius(int samples) const {
  double m = coeffs_[0];
  for (int j = 0; j < samples; ++j) m = std::max(m, radius(kTwoPi * j / samples));
  return m;
}

StarCurve StarCurve::translated(const Vec2& shift) const { return StarCurve(center_ + shift, coeffs_); }

StarCurve StarCurve::scaled_about_center(double factor) const {
  auto c = coeffs_;
  for (auto& v : c) v *= factor;
  return StarCurve(center_, std::move(c));
}

}  // namespace platelab::geometry
