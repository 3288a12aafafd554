#pragma once

#include <span>

#include "platelab/geometry/domain.hpp"
#include "platelab/geometry/polyline.hpp"

namespace platelab::geometry {

struct DistanceResult {
  double value = 0.0;
  double step = 0.0;  // sampling step the value is accurate to
};

// sup over x in inside(include) \ inside(exclude) of dist(x, target), by
// branch and bound on the 1-Lipschitz distance function. `seeds` are points
// of the closure of that region used to initialise the bound.
double sup_distance(const Polyline& include, const Polyline* exclude, const Polyline& target,
                    std::span<const Vec2> seeds, double tolerance);

// Hausdorff distance between the closed regions bounded by a and b.
DistanceResult hausdorff_distance(const Polyline& a, const Polyline& b);
DistanceResult hausdorff_distance(const StarInclusion& a, const StarInclusion& b);

struct ComplementDistances {
  double d = 0.0;
  double d_m = 0.0;
  double step = 0.0;
};

// d = d_H of the closed complements Omega \ D1, Omega \ D2; d_m per the
// boundary-point definition. Both inclusions must lie inside Omega.
ComplementDistances complement_distances(const PlanarDomain& domain, const StarInclusion& d1, const StarInclusion& d2);

bool truncated_cone_contains(const Vec2& vertex, const Vec2& axis, double m0, double radius, const Vec2& query);

}  // namespace platelab::geometry
