#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "platelab/core/errors.hpp"
#include "platelab/geometry/distances.hpp"
#include "platelab/geometry/domain.hpp"
#include "platelab/geometry/grid.hpp"

using namespace platelab;
using namespace platelab::geometry;

namespace {
constexpr double kPi = std::numbers::pi;

StarInclusion disc(double cx, double cy, double r, double step = 1e-3) {
  return StarInclusion(StarCurve::circle(Vec2(cx, cy), r), step);
}

PlanarDomain disc_domain(double radius, ArcRange sigma = {0.0, 0.5}, double delta0 = 0.1) {
  AprioriConstants k;
  k.delta0 = delta0;
  k.M1 = 2.0 * radius + 1.0;
  return PlanarDomain(BoundaryKind::circle, StarCurve::circle(Vec2::Zero(), radius), sigma, k);
}

// Dense lattice of points covering the closures of both regions.
double brute_directed(const Polyline& a, const Polyline& b, double h) {
  double best = 0.0;
  const Vec2 lo = a.lower(), hi = a.upper();
  for (double x = lo.x(); x <= hi.x(); x += h) {
    for (double y = lo.y(); y <= hi.y(); y += h) {
      const Vec2 p(x, y);
      if (a.contains(p) && !b.contains(p)) best = std::max(best, b.distance(p));
    }
  }
  for (const auto& p : a.points()) {
    if (!b.contains(p)) best = std::max(best, b.distance(p));
  }
  return best;
}

// sup over lattice points of A \ B of the distance to the boundary of A.
double brute_sup(const Polyline& a, const Polyline& b, double h) {
  double best = 0.0;
  for (double x = a.lower().x(); x <= a.upper().x(); x += h) {
    for (double y = a.lower().y(); y <= a.upper().y(); y += h) {
      const Vec2 p(x, y);
      if (a.contains(p) && !b.contains(p)) best = std::max(best, a.distance(p));
    }
  }
  return best;
}

double brute_hausdorff(const Polyline& a, const Polyline& b, double h) {
  return std::max(brute_directed(a, b, h), brute_directed(b, a, h));
}
}  // namespace

TEST(StarCurve, CirclePerimeterAreaAndArcLength) {
  const auto c = StarCurve::circle(Vec2(0.3, -0.2), 1.7);
  EXPECT_NEAR(c.perimeter(), 2 * kPi * 1.7, 1e-12);
  EXPECT_NEAR(c.area(), kPi * 1.7 * 1.7, 1e-12);
  for (double f : {0.0, 0.1, 0.25, 0.5, 0.9}) EXPECT_NEAR(c.theta_at_fraction(f), 2 * kPi * f, 1e-10);
}

TEST(StarCurve, ArcLengthMatchesDenseQuadrature) {
  const StarCurve c(Vec2(0.1, 0.2), {1.0, 0.15, -0.05, 0.0, 0.08});
  // Independent oracle: composite Simpson on theta with many panels.
  auto arc = [&](double t1) {
    const int n = 20000;
    const double h = t1 / n;
    double s = c.speed(0.0) + c.speed(t1);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * c.speed(i * h);
    return s * h / 3.0;
  };
  const double p = arc(2 * kPi);
  EXPECT_NEAR(c.perimeter(), p, 1e-9 * p);
  for (double t : {0.3, 1.7, 4.0}) {
    EXPECT_NEAR(c.fraction_at_theta(t), arc(t) / p, 1e-9);
    EXPECT_NEAR(c.theta_at_fraction(arc(t) / p), t, 1e-8);
  }
}

TEST(StarCurve, CurvatureOfCircleAndNormal) {
  const auto c = StarCurve::circle(Vec2::Zero(), 2.0);
  EXPECT_NEAR(c.curvature(0.7), 0.5, 1e-14);
  const Vec2 n = c.outward_normal(0.7);
  EXPECT_NEAR(n.x(), std::cos(0.7), 1e-14);
  EXPECT_NEAR(n.y(), std::sin(0.7), 1e-14);
}

TEST(StarCurve, RejectsNonPositiveRadius) {
  EXPECT_THROW(StarCurve(Vec2::Zero(), {0.5, 0.6, 0.0}), GeometryError);
  EXPECT_THROW(StarCurve(Vec2::Zero(), {0.5, 0.1}), InvalidInputError);
}

TEST(StarCurve, LevelSetApproximatesSignedDistanceNearCurve) {
  const StarCurve c(Vec2::Zero(), {1.0, 0.0, 0.0, 0.1, 0.0});
  const auto pl = c.polyline(1e-3);
  for (double t : {0.0, 0.5, 1.3, 2.9}) {
    const Vec2 p = c.point(t) + 0.01 * c.outward_normal(t);
    EXPECT_NEAR(c.level_set(p), pl.distance(p), 2e-3);
  }
}

TEST(Polyline, DistanceAndContainmentMatchBruteForce) {
  const StarCurve c(Vec2(0.2, 0.0), {1.0, 0.2, 0.1, 0.0, 0.15});
  const auto pl = c.polyline(0.01);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const auto pts = pl.points();
  for (int t = 0; t < 300; ++t) {
    const Vec2 x(u(rng), u(rng));
    double best = 1e300;
    int winding = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Vec2& a = pts[i];
      const Vec2& b = pts[(i + 1) % pts.size()];
      best = std::min(best, segment_distance(x, a, b));
      const double cr = (b.x() - a.x()) * (x.y() - a.y()) - (x.x() - a.x()) * (b.y() - a.y());
      if (a.y() <= x.y() && b.y() > x.y() && cr > 0) ++winding;
      if (a.y() > x.y() && b.y() <= x.y() && cr < 0) --winding;
    }
    EXPECT_NEAR(pl.distance(x), best, 1e-14);
    EXPECT_EQ(pl.contains(x), winding != 0);
  }
}

TEST(Polyline, DetectsSelfIntersection) {
  Polyline bow({Vec2(0, 0), Vec2(1, 1), Vec2(1, 0), Vec2(0, 1)});
  EXPECT_TRUE(bow.self_intersects());
  Polyline sq({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)});
  EXPECT_FALSE(sq.self_intersects());
}

TEST(Apriori, UnitDiscExamplePasses) {
  // Lengths in units of r0 = 0.1 diam: Omega radius 5, D radius 2.
  const auto dom = disc_domain(5.0, {0.0, 0.5});
  const auto inc = disc(0.0, 0.0, 2.0, 0.005);
  const auto rep = check_apriori(dom, inc);
  EXPECT_TRUE(rep.passed()) << rep.failures();
  EXPECT_EQ(rep.checks.size(), 5u);
  EXPECT_NEAR(rep.find("bound_area").measured, 10.0, 1e-3);
  EXPECT_NEAR(rep.find("compactness").measured, 3.0, 1e-4);
  EXPECT_NEAR(rep.find("small_enough").measured, 0.5, 1e-12);
  for (const auto& c : rep.checks) EXPECT_FALSE(c.relation.empty());
}

TEST(Apriori, TouchingInclusionFailsCompactness) {
  const auto dom = disc_domain(5.0);
  const auto inc = disc(3.0, 0.0, 2.0, 0.005);
  const auto rep = check_apriori(dom, inc);
  EXPECT_FALSE(rep.find("compactness").passed);
  EXPECT_NEAR(rep.find("compactness").measured, 0.0, 1e-3);
  EXPECT_FALSE(rep.passed());
}

TEST(Apriori, FullBoundarySigmaFailsSmallEnough) {
  const auto dom = disc_domain(5.0, {0.0, 1.0});
  const auto rep = check_apriori(dom, std::nullopt);
  EXPECT_FALSE(rep.find("small_enough").passed);
  EXPECT_DOUBLE_EQ(rep.find("small_enough").measured, 1.0);
  EXPECT_DOUBLE_EQ(rep.find("small_enough").threshold, 0.9);
}

TEST(Apriori, LargeEnoughFailsForShortSigma) {
  const auto dom = disc_domain(5.0, {0.0, 0.02});
  EXPECT_FALSE(check_apriori(dom, std::nullopt).find("large_enough").passed);
}

TEST(Apriori, RegularityProxyIsZeroOrderForCircleAndGrowsWithModes) {
  EXPECT_NEAR(curvature_regularity_proxy(StarCurve::circle(Vec2::Zero(), 2.0)), 0.5, 1e-9);
  const double wavy = curvature_regularity_proxy(StarCurve(Vec2::Zero(), {1.0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0.05, 0}));
  EXPECT_GT(wavy, 1e3);
}

TEST(Apriori, GeometryFileRoundTrip) {
  const auto doc = KeyValueDocument::parse(
      "boundary.type = polygon-smoothed\nboundary.vertices = -2,-2, 2,-2, 2,2, -2,2\nboundary.modes = 12\n"
      "sigma.begin = 0.9\nsigma.end = 0.3\ninclusion.center = 0.1, 0\ninclusion.coefficients = 0.6, 0.05, 0\n");
  const auto g = geometry_from_document(doc);
  EXPECT_EQ(g.domain.kind(), BoundaryKind::polygon_smoothed);
  ASSERT_TRUE(g.inclusion.has_value());
  EXPECT_NEAR(g.domain.sigma().length_fraction(), 0.4, 1e-12);
  const auto doc2 = geometry_to_document(g.domain, g.inclusion);
  const auto g2 = geometry_from_document(KeyValueDocument::parse(doc2.serialize()));
  EXPECT_EQ(geometry_to_document(g2.domain, g2.inclusion).serialize(), doc2.serialize());
  EXPECT_THROW(geometry_from_document(KeyValueDocument::parse("boundary.type = blob\n")), ConfigError);
}

TEST(Hausdorff, Examples) {
  const auto a = disc(0, 0, 1);
  EXPECT_EQ(hausdorff_distance(a, a).value, 0.0);
  const auto b = disc(0, 0, 2);
  const auto r = hausdorff_distance(a, b);
  EXPECT_NEAR(r.value, 1.0, 1e-3);
  EXPECT_GT(r.step, 0.0);
  const auto c = disc(0.37, -0.2, 1);
  EXPECT_NEAR(hausdorff_distance(a, c).value, std::hypot(0.37, 0.2), 1e-3);
  EXPECT_THROW(hausdorff_distance(Polyline(), a.polyline()), InvalidInputError);
}

TEST(Hausdorff, MatchesBruteForceAndIsAMetric) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.5, 0.5), rr(0.5, 1.2), cc(-0.12, 0.12);
  auto random_star = [&] {
    return StarInclusion(StarCurve(Vec2(u(rng), u(rng)), {rr(rng), cc(rng), cc(rng), cc(rng), cc(rng)}), 5e-3);
  };
  for (int t = 0; t < 4; ++t) {
    const auto a = random_star(), b = random_star(), c = random_star();
    const double ab = hausdorff_distance(a, b).value;
    const double ba = hausdorff_distance(b, a).value;
    const double bc = hausdorff_distance(b, c).value;
    const double ac = hausdorff_distance(a, c).value;
    EXPECT_NEAR(ab, ba, 1e-12);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ac, ab + bc + 5e-3);
    EXPECT_NEAR(ab, brute_hausdorff(a.polyline(), b.polyline(), 0.01), 5e-3);
  }
}

TEST(ComplementDistances, Examples) {
  const auto dom = disc_domain(4.0);
  const auto d1 = disc(0.2, 0.1, 0.8);
  const auto same = complement_distances(dom, d1, d1);
  EXPECT_EQ(same.d, 0.0);
  EXPECT_EQ(same.d_m, 0.0);

  const double s = 0.15;
  const auto d2 = disc(0.2, 0.1, 0.8 * (1 + s));
  const auto dil = complement_distances(dom, d1, d2);
  EXPECT_NEAR(dil.d, s * 0.8, 1e-3);
  EXPECT_NEAR(dil.d_m, s * 0.8, 1e-3);

  const auto far1 = disc(-2.0, 0.0, 0.7);
  const auto far2 = disc(2.0, 0.0, 0.9);
  const auto f = complement_distances(dom, far1, far2);
  EXPECT_GE(f.d, 0.9 - 1e-3);
  EXPECT_EQ(f.d_m, 0.0);
  EXPECT_LE(f.d_m, f.d);
}

TEST(ComplementDistances, MatchesBruteForceOnStarPairs) {
  const auto dom = disc_domain(4.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.2, 0.2), cc(-0.1, 0.1);
  for (int t = 0; t < 3; ++t) {
    const StarInclusion d1(StarCurve(Vec2(u(rng), u(rng)), {1.0, cc(rng), cc(rng), cc(rng), cc(rng)}), 5e-3);
    const StarInclusion d2(StarCurve(Vec2(u(rng), u(rng)), {1.0, cc(rng), cc(rng), cc(rng), cc(rng)}), 5e-3);
    const auto r = complement_distances(dom, d1, d2);
    // Oracle: directed distances between complements reduce to D2\D1 -> dD2 and D1\D2 -> dD1.
    const double oracle = std::max(brute_sup(d2.polyline(), d1.polyline(), 0.01), brute_sup(d1.polyline(), d2.polyline(), 0.01));
    EXPECT_NEAR(r.d, oracle, 1e-2);
    EXPECT_LE(r.d_m, r.d);
  }
}

TEST(ConnectedComponent, DisjointDiscsGiveFullComplement) {
  const auto dom = disc_domain(2.5);
  const auto grid = GridSpec::covering(Vec2(-2.5, -2.5), Vec2(2.5, 2.5), 16, 2);
  const auto d1 = disc(-0.7, 0.0, 0.4), d2 = disc(0.7, 0.2, 0.3);
  const auto g = connected_component_touching(dom, d1, d2, grid);
  std::size_t expected = 0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 x = grid.node(i, j);
      if (dom.contains(x) && !d1.contains(x) && !d2.contains(x)) ++expected;
    }
  std::size_t got = 0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 x = grid.node(i, j);
      if (g.contains_node(i, j) && dom.contains(x) && !d1.contains(x) && !d2.contains(x)) ++got;
    }
  EXPECT_EQ(got, expected);
  std::vector<LevelSet> sets{inside_of(dom.boundary()), outside_of(d1.curve()), outside_of(d2.curve())};
  EXPECT_NEAR(g.area(), region_from_level_sets(grid, sets).area(), 1e-12);
}

TEST(ConnectedComponent, NestedInclusionsUseTheLargerOne) {
  const auto dom = disc_domain(2.5);
  const auto grid = GridSpec::covering(Vec2(-2.5, -2.5), Vec2(2.5, 2.5), 16, 2);
  const auto inner = disc(0.05, 0.0, 0.3), outer = disc(0.0, 0.0, 0.8);
  const auto g = connected_component_touching(dom, inner, outer, grid);
  const auto ref = domain_region(dom, grid, outer);
  EXPECT_NEAR(g.area(), ref.area(), 1e-12);
}

TEST(ConnectedComponent, EnclosedVoidIsExcluded) {
  const auto dom = disc_domain(3.0);
  // Two dimpled limacons facing each other: tips overlap, dimples leave a void.
  const StarInclusion d1(StarCurve(Vec2(-0.19, 0.0), {1.0, -0.9, 0.0}), 2e-3);
  const StarInclusion d2(StarCurve(Vec2(0.19, 0.0), {1.0, 0.9, 0.0}), 2e-3);
  const auto grid = GridSpec::covering(Vec2(-3, -3), Vec2(3, 3), 100, 2);
  const auto g = connected_component_touching(dom, d1, d2, grid);
  // The origin lies in the void: outside both inclusions but not in G.
  ASSERT_FALSE(d1.contains(Vec2::Zero()));
  ASSERT_FALSE(d2.contains(Vec2::Zero()));
  const int i0 = static_cast<int>(std::lround(-grid.origin.x() / grid.h));
  const int j0 = static_cast<int>(std::lround(-grid.origin.y() / grid.h));
  EXPECT_FALSE(g.contains_node(i0, j0));
  EXPECT_TRUE(g.contains_node(i0, j0 + 100));
}

TEST(ConnectedComponent, InclusionOnSigmaIsAnError) {
  AprioriConstants k;
  const PlanarDomain dom(BoundaryKind::circle, StarCurve::circle(Vec2::Zero(), 2.0), {0.0, 0.5}, k);
  const auto grid = GridSpec::covering(Vec2(-2, -2), Vec2(2, 2), 16, 2);
  const auto d1 = disc(0.0, 1.8, 0.5), d2 = disc(0.0, -0.5, 0.3);
  EXPECT_THROW(connected_component_touching(dom, d1, d2, grid), GeometryError);
}

TEST(TruncatedCone, Examples) {
  const Vec2 v(0.3, -0.1), axis(0.0, 1.0);
  EXPECT_TRUE(truncated_cone_contains(v, axis, 0.5, 1.0, v + 0.5 * axis));
  EXPECT_FALSE(truncated_cone_contains(v, axis, 0.5, 1.0, v - 1e-6 * axis));
  const double a = 46.0 * kPi / 180.0;
  EXPECT_FALSE(truncated_cone_contains(v, axis, 1.0, 1.0, v + 0.5 * Vec2(std::sin(a), std::cos(a))));
  const double b = 44.0 * kPi / 180.0;
  EXPECT_TRUE(truncated_cone_contains(v, axis, 1.0, 1.0, v + 0.5 * Vec2(std::sin(b), std::cos(b))));
  EXPECT_FALSE(truncated_cone_contains(v, axis, 0.5, 1.0, v + 1.01 * axis));
}

TEST(Erode, ZeroRadiusKeepsInterior) {
  const auto dom = disc_domain(1.0);
  const auto grid = GridSpec::covering(Vec2(-1, -1), Vec2(1, 1), 40, 2);
  const auto e = erode_domain(dom, grid, 0.0);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) EXPECT_EQ(e.mask.contains_node(i, j), dom.contains(grid.node(i, j)));
}

TEST(Erode, UnitDiscShrinksConcentrically) {
  const auto dom = disc_domain(1.0);
  const auto grid = GridSpec::covering(Vec2(-1, -1), Vec2(1, 1), 100, 2);
  const auto e = erode_domain(dom, grid, 0.25);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double r = grid.node(i, j).norm();
      if (std::abs(r - 0.75) > 2e-3) EXPECT_EQ(e.mask.contains_node(i, j), r < 0.75);
    }
  const auto big = erode_domain(dom, grid, 1.0);
  EXPECT_TRUE(big.empty);
}

TEST(Erode, SquareMatchesBruteForceDistance) {
  // Unit square as a node mask; EDT erosion vs brute-force distance to the outside nodes.
  const auto grid = GridSpec::covering(Vec2(-0.6, -0.6), Vec2(0.6, 0.6), 100, 0);
  RegionMask sq(grid);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 x = grid.node(i, j);
      if (std::abs(x.x()) < 0.5 && std::abs(x.y()) < 0.5) sq.weight[grid.index(i, j)] = 1.0;
    }
  const auto e = erode(sq, 0.1);
  int mismatches = 0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 x = grid.node(i, j);
      const bool in = std::abs(x.x()) < 0.5 - 0.1 && std::abs(x.y()) < 0.5 - 0.1;
      if (e.mask.contains_node(i, j) != in) ++mismatches;
    }
  // Only nodes within a cell of the eroded square's edge may differ.
  EXPECT_LE(mismatches, 4 * 80 * 2);
  // Brute-force EDT oracle on a small lattice.
  std::vector<char> feat(grid.size());
  for (std::size_t k = 0; k < feat.size(); ++k) feat[k] = sq.weight[k] < 0.5;
  const auto d2 = squared_distance_transform(feat, grid.nx, grid.ny);
  for (int j = 0; j < grid.ny; j += 7)
    for (int i = 0; i < grid.nx; i += 5) {
      double best = 1e20;
      for (int b = 0; b < grid.ny; ++b)
        for (int a = 0; a < grid.nx; ++a)
          if (feat[grid.index(a, b)]) best = std::min(best, double((a - i) * (a - i) + (b - j) * (b - j)));
      EXPECT_DOUBLE_EQ(d2[grid.index(i, j)], best);
    }
}

TEST(Erode, SuccessiveErosionIsContained) {
  const auto dom = disc_domain(1.0);
  const auto grid = GridSpec::covering(Vec2(-1, -1), Vec2(1, 1), 50, 2);
  const auto base = domain_region(dom, grid);
  const auto ab = erode(erode(base, 0.1).mask, 0.15);
  const auto direct = erode(base, 0.25 - grid.h);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (ab.mask.weight[k] > 0) EXPECT_GT(direct.mask.weight[k], 0.0);
  }
}

TEST(Regions, AreaFractionsIntegrateDiscArea) {
  const auto grid = GridSpec::covering(Vec2(-1, -1), Vec2(1, 1), 32, 2);
  std::vector<LevelSet> sets{inside_disc(Vec2(0.013, -0.02), 0.77)};
  const auto m = region_from_level_sets(grid, sets);
  EXPECT_NEAR(m.area(), kPi * 0.77 * 0.77, 2e-4);
  // First moment about the center vanishes.
  Vec2 mom = Vec2::Zero();
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const auto k = grid.index(i, j);
      mom += m.weight[k] * (grid.node(i, j) + m.offset[k] - Vec2(0.013, -0.02));
    }
  EXPECT_NEAR(mom.norm() * grid.h * grid.h, 0.0, 1e-5);
}

TEST(Regions, PolygonSmoothedSquareIsCloseToSquare) {
  const auto c = PlanarDomain::smooth_polygon({Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)}, 32);
  EXPECT_NEAR(c.area(), 4.0, 0.1);
  EXPECT_NEAR(c.radius(0.0), 1.0, 0.05);
}
