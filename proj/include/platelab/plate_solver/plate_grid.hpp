#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "platelab/geometry/domain.hpp"
#include "platelab/geometry/grid.hpp"

namespace platelab::plate_solver {

using geometry::GridSpec;
using geometry::PlanarDomain;
using geometry::RegionMask;
using geometry::StarInclusion;

enum class NodeKind : std::uint8_t {
  inactive,  // outside the band around Omega, never referenced
  free,      // inside Omega \ closure(D)
  ghost,     // outside Omega \ closure(D) within the band; unknown, stabilized
  clamped,   // inside D beyond the band; w = 0
};

struct GridOptions {
  double resolution = 64.0;  // nodes per r0
  double ghost_penalty = 20.0;
  double active_band = 3.0;  // cells outside Omega \ closure(D) carrying unknowns
  double min_clearance_cells = 8.0;
  int subdivisions = 4;
};

class PlateGrid {
 public:
  PlanarDomain domain;
  std::optional<StarInclusion> inclusion;
  GridOptions options;
  GridSpec spec;
  std::vector<NodeKind> kind;
  std::vector<int> dof;        // unknown number for free and ghost nodes, -1 otherwise
  std::vector<double> phi;     // level set of Omega at nodes
  RegionMask nodes;            // dual-cell fractions of Omega \ closure(D)
  RegionMask cells;            // cell fractions; entry (i,j) is the cell with lower corner node (i,j),
                               // offsets relative to the cell centre
  double clearance = 0.0;      // dist(D, boundary of Omega); +inf without inclusion
  std::size_t unknowns = 0;

  double h() const { return spec.h; }
  NodeKind at(int i, int j) const { return spec.valid(i, j) ? kind[spec.index(i, j)] : NodeKind::inactive; }
  std::size_t count(NodeKind k) const;
};

// Throws GeometryError if D leaves Omega or violates the compactness
// clearance r0, ResolutionError if the clearance spans fewer than
// options.min_clearance_cells cells.
PlateGrid build_grid(const PlanarDomain& domain, const std::optional<StarInclusion>& inclusion,
                     const GridOptions& options = {});

}  // namespace platelab::plate_solver
