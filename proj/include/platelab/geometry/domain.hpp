#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "platelab/core/keyvalue.hpp"
#include "platelab/geometry/polyline.hpp"
#include "platelab/geometry/star_curve.hpp"

namespace platelab::geometry {

enum class BoundaryKind { circle, fourier_star, polygon_smoothed };

std::string to_string(BoundaryKind kind);
BoundaryKind boundary_kind_from_string(const std::string& name);

// Sub-arc of a closed curve given by arc-length fractions. `end < begin`
// wraps through fraction 0.
struct ArcRange {
  double begin = 0.0;
  double end = 0.5;

  double length_fraction() const;
  bool contains(double fraction) const;
  // Fraction reached after moving t in [0,1] of the way along the arc.
  double at(double t) const;
  // Position of `fraction` along the arc in [0,1], or -1 when outside.
  double relative(double fraction) const;
};

// All lengths are in units of r0; `r0` is the physical scale kept for reporting.
struct AprioriConstants {
  double r0 = 1.0;
  double M0 = 0.5;
  double M1 = 6.0;
  double delta0 = 0.1;
  double alpha = 0.5;
  double regularity_bound = 1.0e3;
  double distance_step = 1.0 / 200.0;
};

class PlanarDomain {
 public:
  PlanarDomain(BoundaryKind kind, StarCurve boundary, ArcRange sigma, AprioriConstants constants,
               std::optional<double> p0_fraction = std::nullopt);

  // Star-shaped polygon smoothed by a low-pass radial Fourier projection
  // around the vertex centroid.
  static StarCurve smooth_polygon(const std::vector<Vec2>& vertices, int modes);
  static PlanarDomain from_polygon(const std::vector<Vec2>& vertices, int modes, ArcRange sigma,
                                   AprioriConstants constants, std::optional<double> p0_fraction = std::nullopt);
  const std::vector<Vec2>& polygon_vertices() const { return polygon_vertices_; }
  int polygon_modes() const { return polygon_modes_; }

  BoundaryKind kind() const { return kind_; }
  const StarCurve& boundary() const { return boundary_; }
  const Polyline& boundary_polyline() const { return polyline_; }
  const ArcRange& sigma() const { return sigma_; }
  const AprioriConstants& constants() const { return constants_; }
  double p0_fraction() const { return p0_fraction_; }
  Vec2 p0() const { return point_at(p0_fraction_); }

  Vec2 point_at(double fraction) const;
  Vec2 normal_at(double fraction) const;
  // Counterclockwise unit tangent.
  Vec2 tangent_at(double fraction) const;
  double perimeter() const { return boundary_.perimeter(); }
  bool contains(const Vec2& x) const { return boundary_.contains(x); }
  double diameter() const;

 private:
  BoundaryKind kind_;
  StarCurve boundary_;
  ArcRange sigma_;
  AprioriConstants constants_;
  double p0_fraction_ = 0.0;
  Polyline polyline_;
  std::vector<Vec2> polygon_vertices_;
  int polygon_modes_ = 0;
};

class StarInclusion {
 public:
  StarInclusion(StarCurve curve, double sampling_step = 1.0 / 200.0);
  // (cx, cy, a0, a1, b1, ..., aK, bK)
  static StarInclusion from_parameters(const std::vector<double>& params, double sampling_step = 1.0 / 200.0);
  std::vector<double> parameters() const;

  const StarCurve& curve() const { return curve_; }
  const Polyline& polyline() const { return polyline_; }
  int modes() const { return curve_.modes(); }
  bool contains(const Vec2& x) const { return curve_.contains(x); }
  double sampling_step() const { return step_; }

 private:
  StarCurve curve_;
  double step_;
  Polyline polyline_;
};

struct AprioriCheck {
  std::string name;
  std::string relation;  // "<=", ">=", "=="
  double measured = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct AprioriReport {
  std::vector<AprioriCheck> checks;
  bool passed() const;
  const AprioriCheck& find(const std::string& name) const;
  std::string failures() const;
};

// One entry each for bound_area, compactness, reg_D, large_enough, small_enough.
// Without an inclusion the compactness and reg_D entries are omitted.
AprioriReport check_apriori(const PlanarDomain& domain, const std::optional<StarInclusion>& inclusion);

// Scaled C^4 proxy of the curvature: max over k<=4 of max |Delta^k kappa / ds^k|.
double curvature_regularity_proxy(const StarCurve& curve, int samples = 512);

// Geometry file (key-value document). See docs/file_formats.md.
struct GeometrySpec {
  PlanarDomain domain;
  std::optional<StarInclusion> inclusion;
};
GeometrySpec geometry_from_document(const KeyValueDocument& doc);
GeometrySpec load_geometry(const std::filesystem::path& path);
KeyValueDocument geometry_to_document(const PlanarDomain& domain, const std::optional<StarInclusion>& inclusion);

}  // namespace platelab::geometry
