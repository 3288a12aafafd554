#include "platelab/geometry/distances.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <vector>

#include "platelab/core/errors.hpp"

namespace platelab::geometry {

double sup_distance(const Polyline& include, const Polyline* exclude, const Polyline& target,
                    std::span<const Vec2> seeds, double tolerance) {
  double best = 0.0;
  for (const auto& s : seeds) best = std::max(best, target.distance(s));

  struct Cell {
    Vec2 c;
    double half;
  };
  const Vec2 lo = include.lower(), hi = include.upper();
  const double half0 = 0.5 * std::max(hi.x() - lo.x(), hi.y() - lo.y()) + tolerance;
  std::vector<Cell> stack{{0.5 * (lo + hi), half0}};
  while (!stack.empty()) {
    const Cell cell = stack.back();
    stack.pop_back();
    const double hd = cell.half * std::sqrt(2.0);
    const bool in_inc = include.contains(cell.c);
    if (!in_inc && include.distance(cell.c) > hd) continue;
    bool in_exc = false;
    if (exclude) {
      in_exc = exclude->contains(cell.c);
      if (in_exc && exclude->distance(cell.c) > hd) continue;
    }
    const double f = target.distance(cell.c);
    if (in_inc && !in_exc) best = std::max(best, f);
    if (f + hd <= best + tolerance) continue;
    if (hd < tolerance) continue;
    const double q = 0.5 * cell.half;
    stack.push_back({cell.c + Vec2(-q, -q), q});
    stack.push_back({cell.c + Vec2(q, -q), q});
    stack.push_back({cell.c + Vec2(-q, q), q});
    stack.push_back({cell.c + Vec2(q, q), q});
  }
  return best;
}

namespace {
double directed(const Polyline& a, const Polyline& b) {
  // Points of A outside B; the boundary samples of A seed the bound.
  std::vector<Vec2> seeds;
  for (const auto& p : a.points()) {
    if (!b.contains(p)) seeds.push_back(p);
  }
  const double tol = 0.5 * std::max(a.step(), b.step());
  return sup_distance(a, &b, b, seeds, tol);
}
}  // namespace

DistanceResult hausdorff_distance(const Polyline& a, const Polyline& b) {
  if (a.empty() || b.empty()) throw InvalidInputError("hausdorff_distance: empty sampling");
  return {std::max(directed(a, b), directed(b, a)), std::max(a.step(), b.step())};
}

DistanceResult hausdorff_distance(const StarInclusion& a, const StarInclusion& b) {
  return hausdorff_distance(a.polyline(), b.polyline());
}

ComplementDistances complement_distances(const PlanarDomain& domain, const StarInclusion& d1, const StarInclusion& d2) {
  const auto& p1 = d1.polyline();
  const auto& p2 = d2.polyline();
  if (p1.empty() || p2.empty()) throw InvalidInputError("complement_distances: empty sampling");
  for (const auto* p : {&p1, &p2}) {
    for (const auto& x : p->points()) {
      if (!domain.contains(x)) throw GeometryError("complement_distances: inclusion leaves the domain");
    }
  }
  ComplementDistances out;
  out.step = std::max(p1.step(), p2.step());
  const double tol = 0.5 * out.step;

  // Boundary points of D1 lying in D2 (and vice versa) define d_m and seed d.
  std::vector<Vec2> s12, s21;
  double dm = 0.0;
  for (const auto& x : p1.points()) {
    if (p2.contains(x)) {
      s12.push_back(x);
      dm = std::max(dm, p2.distance(x));
    }
  }
  for (const auto& x : p2.points()) {
    if (p1.contains(x)) {
      s21.push_back(x);
      dm = std::max(dm, p1.distance(x));
    }
  }
  // Complement of D1 to complement of D2: points in D2 \ D1, distance to boundary of D2.
  for (const auto& x : p2.points()) {
    if (!p1.contains(x)) s12.push_back(x);
  }
  for (const auto& x : p1.points()) {
    if (!p2.contains(x)) s21.push_back(x);
  }
  const double a = sup_distance(p2, &p1, p2, s12, tol);
  const double b = sup_distance(p1, &p2, p1, s21, tol);
  out.d = std::max(a, b);
  out.d_m = dm;
  if (out.d_m > out.d) throw GeometryError("complement_distances: d_m exceeds d");
  return out;
}

bool truncated_cone_contains(const Vec2& vertex, const Vec2& axis, double m0, double radius, const Vec2& query) {
  const Vec2 q = query - vertex;
  const double r = q.norm();
  if (r == 0.0) return true;
  if (r >= radius) return false;
  const Vec2 u = axis.normalized();
  const double angle = std::atan2(std::abs(u.x() * q.y() - u.y() * q.x()), u.dot(q));
  const double half_width = 0.5 * std::numbers::pi - std::atan(m0);
  return angle <= half_width + 1e-14;
}

}  // namespace platelab::geometry
