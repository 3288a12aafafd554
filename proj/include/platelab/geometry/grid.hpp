#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "platelab/geometry/domain.hpp"

namespace platelab::geometry {

// Uniform node lattice x_ij = origin + h (i, j), 0 <= i < nx, 0 <= j < ny.
struct GridSpec {
  Vec2 origin = Vec2::Zero();
  double h = 1.0;
  int nx = 0;
  int ny = 0;

  // Lattice aligned with the origin of coordinates (nodes at integer multiples
  // of h), covering [lo, hi] plus `margin` extra nodes on every side.
  static GridSpec covering(const Vec2& lo, const Vec2& hi, double resolution, int margin);

  Vec2 node(int i, int j) const { return origin + h * Vec2(i, j); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  bool valid(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
  double resolution() const { return 1.0 / h; }
};

using LevelSet = std::function<double(const Vec2&)>;

LevelSet inside_of(const StarCurve& curve);   // negative inside the curve
LevelSet outside_of(const StarCurve& curve);  // negative outside the curve
LevelSet inside_disc(const Vec2& center, double radius);

struct CellPiece {
  double area = 0.0;
  Vec2 centroid = Vec2::Zero();
};

// Area and centroid of {x in square : phi_k(x) < 0 for all k}, computed by
// clipping sub-triangles against the linear interpolants of each phi_k.
CellPiece clip_square(const Vec2& lower, double h, std::span<const LevelSet> sets, int subdivisions = 4);

// Same, skipping the clip when the cell is certainly inside or outside.
CellPiece cut_square(const Vec2& lower, double h, std::span<const LevelSet> sets, int subdivisions = 4);

// Per-node dual-cell area fractions in [0,1] and centroid offsets.
struct RegionMask {
  GridSpec grid;
  std::vector<double> weight;
  std::vector<Vec2> offset;

  explicit RegionMask(GridSpec g = {});
  double area() const;
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  bool contains_node(int i, int j) const { return weight[grid.index(i, j)] > 0.0; }
};

RegionMask region_from_level_sets(const GridSpec& grid, std::span<const LevelSet> sets, int subdivisions = 4);
// Omega \ closure(D) when an inclusion is given, Omega otherwise.
RegionMask domain_region(const PlanarDomain& domain, const GridSpec& grid,
                         const std::optional<StarInclusion>& inclusion = std::nullopt);

struct ErodedRegion {
  RegionMask mask;
  bool empty = false;
};

// Nodes of `region` (weight >= 1/2) farther than rho from the complement,
// using a Euclidean distance transform on the lattice.
ErodedRegion erode(const RegionMask& region, double rho);
// { x in Omega \ closure(D) : dist(x, boundary) > rho } using exact distances to
// the sampled boundaries.
ErodedRegion erode_domain(const PlanarDomain& domain, const GridSpec& grid, double rho,
                          const std::optional<StarInclusion>& inclusion = std::nullopt);

// Connected component of Omega \ closure(D1 u D2) (4-connected on nodes)
// containing the nodes adjacent to Sigma; weights are area fractions.
RegionMask connected_component_touching(const PlanarDomain& domain, const StarInclusion& d1, const StarInclusion& d2,
                                        const GridSpec& grid);

// Squared Euclidean distance transform (in lattice units) to the nodes where
// `feature` is true.
std::vector<double> squared_distance_transform(const std::vector<char>& feature, int nx, int ny);

}  // namespace platelab::geometry
