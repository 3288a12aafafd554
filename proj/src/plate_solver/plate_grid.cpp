#include "platelab/plate_solver/plate_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "platelab/core/errors.hpp"

namespace platelab::plate_solver {

using geometry::LevelSet;
using geometry::Vec2;

std::size_t PlateGrid::count(NodeKind k) const { return static_cast<std::size_t>(std::count(kind.begin(), kind.end(), k)); }

PlateGrid build_grid(const PlanarDomain& domain, const std::optional<StarInclusion>& inclusion,
                     const GridOptions& options) {
  if (!(options.resolution > 0.0)) throw InvalidInputError("grid: resolution must be positive");
  if (!(options.active_band >= 2.5)) throw InvalidInputError("grid: active band must be at least 2.5 cells");
  PlateGrid g{domain, inclusion, options, {}, {}, {}, {}, RegionMask{}, RegionMask{}, 0.0, 0};
  const double h = 1.0 / options.resolution;

  g.clearance = std::numeric_limits<double>::infinity();
  if (inclusion) {
    for (const auto& p : inclusion->polyline().points()) {
      if (!domain.contains(p)) throw GeometryError("inclusion is not contained in the domain");
      g.clearance = std::min(g.clearance, domain.boundary_polyline().distance(p));
    }
    const double r0 = domain.constants().r0;
    if (g.clearance < r0) {
      throw GeometryError("inclusion violates compactness: clearance " + std::to_string(g.clearance) + " < r0 = " +
                          std::to_string(r0));
    }
    if (g.clearance / h < options.min_clearance_cells) {
      throw ResolutionError("clearance spans " + std::to_string(g.clearance / h) + " cells, need " +
                            std::to_string(options.min_clearance_cells));
    }
  }

  const auto& poly = domain.boundary_polyline();
  const int margin = static_cast<int>(std::ceil(options.active_band)) + 4;
  g.spec = GridSpec::covering(poly.lower(), poly.upper(), options.resolution, margin);
  const auto& spec = g.spec;
  const std::size_t n = spec.size();
  g.kind.assign(n, NodeKind::inactive);
  g.dof.assign(n, -1);
  g.phi.assign(n, 0.0);
  g.nodes = RegionMask(spec);
  g.cells = RegionMask(spec);

  std::vector<LevelSet> sets{geometry::inside_of(domain.boundary())};
  if (inclusion) sets.push_back(geometry::outside_of(inclusion->curve()));

  int next = 0;
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      const auto k = spec.index(i, j);
      const Vec2 x = spec.node(i, j);
      const double phi = domain.boundary().level_set(x);
      g.phi[k] = phi;
      NodeKind kind = NodeKind::inactive;
      const double phi_d = inclusion ? inclusion->curve().level_set(x) : 1.0;
      if (phi_d < 0.0) {
        kind = phi_d > -options.active_band * h ? NodeKind::ghost : NodeKind::clamped;
      } else if (phi < 0.0) {
        kind = NodeKind::free;
      } else if (phi < options.active_band * h) {
        kind = NodeKind::ghost;
      }
      g.kind[k] = kind;
      if (phi > 2.0 * h) continue;
      const auto dual = geometry::cut_square(x - Vec2(0.5 * h, 0.5 * h), h, sets, options.subdivisions);
      if (dual.area > 0.0) {
        g.nodes.weight[k] = dual.area / (h * h);
        g.nodes.offset[k] = dual.centroid - x;
      }
      const auto cell = geometry::cut_square(x, h, sets, options.subdivisions);
      if (cell.area > 0.0) {
        g.cells.weight[k] = cell.area / (h * h);
        g.cells.offset[k] = cell.centroid - (x + Vec2(0.5 * h, 0.5 * h));
      }
    }
  }
  // Ghost nodes reached by no cut cell and no unknown axis chain carry no
  // energy; they are dropped (clamped inside D, inactive outside).
  auto unknown = [&](int i, int j) {
    const auto kind = g.at(i, j);
    return kind == NodeKind::free || kind == NodeKind::ghost;
  };
  auto anchored = [&](int i, int j) {
    if (g.nodes.weight[spec.index(i, j)] > 0.0) return true;
    for (int dj = -1; dj <= 0; ++dj) {
      for (int di = -1; di <= 0; ++di) {
        if (spec.valid(i + di, j + dj) && g.cells.weight[spec.index(i + di, j + dj)] > 0.0) return true;
      }
    }
    for (int dir = 0; dir < 2; ++dir) {
      const int si = dir == 0 ? 1 : 0, sj = 1 - si;
      for (int start = -3; start <= 0; ++start) {
        bool ok = true;
        for (int m = 0; m < 4 && ok; ++m) ok = unknown(i + (start + m) * si, j + (start + m) * sj);
        if (ok) return true;
      }
    }
    return false;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (int j = 0; j < spec.ny; ++j) {
      for (int i = 0; i < spec.nx; ++i) {
        const auto k = spec.index(i, j);
        if (g.kind[k] != NodeKind::ghost || anchored(i, j)) continue;
        g.kind[k] = g.phi[k] < 0.0 ? NodeKind::clamped : NodeKind::inactive;
        changed = true;
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (g.kind[k] == NodeKind::free || g.kind[k] == NodeKind::ghost) g.dof[k] = next++;
  }
  g.unknowns = static_cast<std::size_t>(next);
  return g;
}

}  // namespace platelab::plate_solver
