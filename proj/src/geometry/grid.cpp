#include "platelab/geometry/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>

#include "platelab/core/errors.hpp"

namespace platelab::geometry {

GridSpec GridSpec::covering(const Vec2& lo, const Vec2& hi, double resolution, int margin) {
  if (!(resolution > 0.0)) throw InvalidInputError("grid: resolution must be positive");
  GridSpec g;
  g.h = 1.0 / resolution;
  const long i0 = static_cast<long>(std::floor(lo.x() / g.h)) - margin;
  const long j0 = static_cast<long>(std::floor(lo.y() / g.h)) - margin;
  const long i1 = static_cast<long>(std::ceil(hi.x() / g.h)) + margin;
  const long j1 = static_cast<long>(std::ceil(hi.y() / g.h)) + margin;
  g.origin = Vec2(static_cast<double>(i0) * g.h, static_cast<double>(j0) * g.h);
  g.nx = static_cast<int>(i1 - i0 + 1);
  g.ny = static_cast<int>(j1 - j0 + 1);
  return g;
}

LevelSet inside_of(const StarCurve& curve) {
  return [curve](const Vec2& x) { return curve.level_set(x); };
}

LevelSet outside_of(const StarCurve& curve) {
  return [curve](const Vec2& x) { return -curve.level_set(x); };
}

LevelSet inside_disc(const Vec2& center, double radius) {
  return [center, radius](const Vec2& x) { return (x - center).norm() - radius; };
}

namespace {

struct Poly {
  std::array<Vec2, 16> p;
  int n = 0;
};

void clip(Poly& poly, const LevelSet& phi) {
  std::array<double, 16> v;
  bool any_out = false, any_in = false;
  for (int i = 0; i < poly.n; ++i) {
    v[i] = phi(poly.p[i]);
    (v[i] < 0.0 ? any_in : any_out) = true;
  }
  if (!any_out) return;
  if (!any_in) {
    poly.n = 0;
    return;
  }
  Poly out;
  for (int i = 0; i < poly.n; ++i) {
    const int k = (i + 1) % poly.n;
    const double a = v[i], b = v[k];
    if (a < 0.0) out.p[out.n++] = poly.p[i];
    if ((a < 0.0) != (b < 0.0) && out.n < 16) {
      const double t = a / (a - b);
      out.p[out.n++] = poly.p[i] + t * (poly.p[k] - poly.p[i]);
    }
  }
  poly = out;
}

void accumulate(const Poly& poly, double& area, Vec2& moment) {
  if (poly.n < 3) return;
  double s = 0.0;
  Vec2 c = Vec2::Zero();
  for (int i = 0; i < poly.n; ++i) {
    const Vec2& a = poly.p[i];
    const Vec2& b = poly.p[(i + 1) % poly.n];
    const double cr = a.x() * b.y() - b.x() * a.y();
    s += cr;
    c += (a + b) * cr;
  }
  if (s == 0.0) return;
  // Signed area s/2, centroid c/(3s); moment = area * centroid = c/6.
  area += 0.5 * s;
  moment += c / 6.0;
}

}  // namespace

CellPiece clip_square(const Vec2& lower, double h, std::span<const LevelSet> sets, int subdivisions) {
  const double hs = h / subdivisions;
  double area = 0.0;
  Vec2 moment = Vec2::Zero();
  for (int a = 0; a < subdivisions; ++a) {
    for (int b = 0; b < subdivisions; ++b) {
      const Vec2 p0 = lower + hs * Vec2(a, b);
      const std::array<Vec2, 4> q{p0, p0 + Vec2(hs, 0), p0 + Vec2(hs, hs), p0 + Vec2(0, hs)};
      for (const auto& tri : {std::array<int, 3>{0, 1, 2}, std::array<int, 3>{0, 2, 3}}) {
        Poly poly;
        poly.n = 3;
        for (int k = 0; k < 3; ++k) poly.p[k] = q[tri[k]];
        for (const auto& phi : sets) {
          clip(poly, phi);
          if (poly.n == 0) break;
        }
        accumulate(poly, area, moment);
      }
    }
  }
  CellPiece piece;
  piece.area = area;
  piece.centroid = area > 0.0 ? Vec2(moment / area) : Vec2(lower + Vec2(0.5 * h, 0.5 * h));
  return piece;
}

CellPiece cut_square(const Vec2& lower, double h, std::span<const LevelSet> sets, int subdivisions) {
  const Vec2 center = lower + Vec2(0.5 * h, 0.5 * h);
  const double guard = 1.5 * std::sqrt(0.5) * h;
  bool all_inside = true;
  for (const auto& phi : sets) {
    const double v = phi(center);
    if (v > guard) return {0.0, center};
    if (v > -guard) all_inside = false;
  }
  if (all_inside) return {h * h, center};
  return clip_square(lower, h, sets, subdivisions);
}

RegionMask::RegionMask(GridSpec g) : grid(g), weight(g.size(), 0.0), offset(g.size(), Vec2::Zero()) {}

double RegionMask::area() const {
  double a = 0.0;
  for (double w : weight) a += w;
  return a * grid.h * grid.h;
}

std::size_t RegionMask::count() const {
  return static_cast<std::size_t>(std::count_if(weight.begin(), weight.end(), [](double w) { return w > 0.0; }));
}

RegionMask region_from_level_sets(const GridSpec& grid, std::span<const LevelSet> sets, int subdivisions) {
  RegionMask mask(grid);
  const double h = grid.h;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 x = grid.node(i, j);
      const auto piece = cut_square(x - Vec2(0.5 * h, 0.5 * h), h, sets, subdivisions);
      const auto k = grid.index(i, j);
      mask.weight[k] = piece.area / (h * h);
      if (mask.weight[k] > 0.0) mask.offset[k] = piece.centroid - x;
    }
  }
  return mask;
}

RegionMask domain_region(const PlanarDomain& domain, const GridSpec& grid, const std::optional<StarInclusion>& inclusion) {
  std::vector<LevelSet> sets{inside_of(domain.boundary())};
  if (inclusion) sets.push_back(outside_of(inclusion->curve()));
  return region_from_level_sets(grid, sets);
}

std::vector<double> squared_distance_transform(const std::vector<char>& feature, int nx, int ny) {
  const double inf = 1e20;
  std::vector<double> d(feature.size());
  for (std::size_t k = 0; k < feature.size(); ++k) d[k] = feature[k] ? 0.0 : inf;
  // Lower envelope of parabolas along one line.
  auto pass = [&](int n, auto get, auto set) {
    std::vector<double> f(n), out(n), z(n + 1);
    std::vector<int> v(n);
    for (int q = 0; q < n; ++q) f[q] = get(q);
    int k = 0;
    v[0] = 0;
    z[0] = -inf;
    z[1] = inf;
    for (int q = 1; q < n; ++q) {
      auto meet = [&](int r) { return ((f[q] + q * q) - (f[r] + static_cast<double>(r) * r)) / (2.0 * (q - r)); };
      double s = meet(v[k]);
      while (s <= z[k]) {
        --k;
        s = meet(v[k]);
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = inf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
      while (z[k + 1] < q) ++k;
      const double dq = q - v[k];
      out[q] = dq * dq + f[v[k]];
    }
    for (int q = 0; q < n; ++q) set(q, out[q]);
  };
  for (int j = 0; j < ny; ++j) {
    pass(nx, [&](int i) { return d[static_cast<std::size_t>(j) * nx + i]; },
         [&](int i, double val) { d[static_cast<std::size_t>(j) * nx + i] = val; });
  }
  for (int i = 0; i < nx; ++i) {
    pass(ny, [&](int j) { return d[static_cast<std::size_t>(j) * nx + i]; },
         [&](int j, double val) { d[static_cast<std::size_t>(j) * nx + i] = val; });
  }
  return d;
}

ErodedRegion erode(const RegionMask& region, double rho) {
  if (rho < 0.0) throw InvalidInputError("erode: rho must be nonnegative");
  const auto& g = region.grid;
  std::vector<char> outside(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) outside[k] = region.weight[k] < 0.5;
  const auto d2 = squared_distance_transform(outside, g.nx, g.ny);
  ErodedRegion out{RegionMask(g), true};
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (outside[k]) continue;
    // Nearest outside node is about half a cell beyond the boundary.
    const double dist = std::sqrt(d2[k]) * g.h - 0.5 * g.h;
    if (dist > rho) {
      out.mask.weight[k] = 1.0;
      out.empty = false;
    }
  }
  return out;
}

ErodedRegion erode_domain(const PlanarDomain& domain, const GridSpec& grid, double rho,
                          const std::optional<StarInclusion>& inclusion) {
  if (rho < 0.0) throw InvalidInputError("erode: rho must be nonnegative");
  ErodedRegion out{RegionMask(grid), true};
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 x = grid.node(i, j);
      if (!domain.contains(x)) continue;
      if (domain.boundary_polyline().distance(x) <= rho) continue;
      if (inclusion && (inclusion->contains(x) || inclusion->polyline().distance(x) <= rho)) continue;
      out.mask.weight[grid.index(i, j)] = 1.0;
      out.empty = false;
    }
  }
  return out;
}

RegionMask connected_component_touching(const PlanarDomain& domain, const StarInclusion& d1, const StarInclusion& d2,
                                        const GridSpec& grid) {
  const double h = grid.h;
  std::vector<char> free(grid.size(), 0);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 x = grid.node(i, j);
      free[grid.index(i, j)] = domain.contains(x) && !d1.contains(x) && !d2.contains(x);
    }
  }
  std::vector<char> in_g(grid.size(), 0);
  std::deque<std::pair<int, int>> queue;
  const auto n_seeds = static_cast<int>(std::ceil(domain.sigma().length_fraction() * domain.perimeter() / (0.5 * h)));
  for (int s = 0; s <= n_seeds; ++s) {
    const double f = domain.sigma().at(static_cast<double>(s) / std::max(1, n_seeds));
    const Vec2 p = domain.point_at(f) - h * domain.normal_at(f);
    const int ci = static_cast<int>(std::lround((p.x() - grid.origin.x()) / h));
    const int cj = static_cast<int>(std::lround((p.y() - grid.origin.y()) / h));
    bool seeded = false;
    for (int dj = -1; dj <= 1 && !seeded; ++dj) {
      for (int di = -1; di <= 1 && !seeded; ++di) {
        const int i = ci + di, j = cj + dj;
        if (!grid.valid(i, j)) continue;
        const Vec2 x = grid.node(i, j);
        if (!domain.contains(x)) continue;
        if (d1.contains(x) || d2.contains(x)) {
          throw GeometryError("connected component: a node next to Sigma is covered by an inclusion");
        }
        const auto k = grid.index(i, j);
        if (!in_g[k]) {
          in_g[k] = 1;
          queue.emplace_back(i, j);
        }
        seeded = true;
      }
    }
    if (!seeded) throw GeometryError("connected component: Sigma is not covered by the grid");
  }
  while (!queue.empty()) {
    const auto [i, j] = queue.front();
    queue.pop_front();
    const std::array<std::pair<int, int>, 4> nb{{{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}}};
    for (const auto& [a, b] : nb) {
      if (!grid.valid(a, b)) continue;
      const auto k = grid.index(a, b);
      if (free[k] && !in_g[k]) {
        in_g[k] = 1;
        queue.emplace_back(a, b);
      }
    }
  }
  const std::array<LevelSet, 3> sets{inside_of(domain.boundary()), outside_of(d1.curve()), outside_of(d2.curve())};
  // Cut cells whose node lies outside the free set still carry a piece of G
  // when they touch a node of G.
  std::vector<char> candidate = in_g;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      if (!in_g[grid.index(i, j)]) continue;
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (grid.valid(i + di, j + dj) && !free[grid.index(i + di, j + dj)]) candidate[grid.index(i + di, j + dj)] = 1;
        }
      }
    }
  }
  RegionMask mask(grid);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const auto k = grid.index(i, j);
      if (!candidate[k]) continue;
      const Vec2 x = grid.node(i, j);
      const auto piece = cut_square(x - Vec2(0.5 * h, 0.5 * h), h, sets);
      mask.weight[k] = piece.area / (h * h);
      mask.offset[k] = piece.centroid - x;
    }
  }
  return mask;
}

}  // namespace platelab::geometry
