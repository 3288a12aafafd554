#include "platelab/geometry/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "platelab/core/errors.hpp"
#include "platelab/core/fourier.hpp"

namespace platelab::geometry {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap01(double f) { return f - std::floor(f); }

std::size_t samples_for(const StarCurve& c, double step) {
  return static_cast<std::size_t>(std::max(16.0, std::ceil(c.perimeter() / step)));
}
}  // namespace

std::string to_string(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::circle: return "circle";
    case BoundaryKind::fourier_star: return "fourier-star";
    case BoundaryKind::polygon_smoothed: return "polygon-smoothed";
  }
  return "unknown";
}

BoundaryKind boundary_kind_from_string(const std::string& name) {
  if (name == "circle") return BoundaryKind::circle;
  if (name == "fourier-star") return BoundaryKind::fourier_star;
  if (name == "polygon-smoothed") return BoundaryKind::polygon_smoothed;
  throw ConfigError("unknown boundary type '" + name + "' (circle | fourier-star | polygon-smoothed)");
}

double ArcRange::length_fraction() const {
  const double b = wrap01(begin), e = wrap01(end);
  if (end - begin >= 1.0) return 1.0;
  return e >= b ? e - b : 1.0 - b + e;
}

bool ArcRange::contains(double fraction) const { return relative(fraction) >= 0.0; }

double ArcRange::at(double t) const { return wrap01(wrap01(begin) + t * length_fraction()); }

double ArcRange::relative(double fraction) const {
  const double len = length_fraction();
  if (len <= 0.0) return -1.0;
  double d = wrap01(fraction) - wrap01(begin);
  if (d < 0.0) d += 1.0;
  if (len >= 1.0) return d;
  return d <= len ? d / len : -1.0;
}

PlanarDomain::PlanarDomain(BoundaryKind kind, StarCurve boundary, ArcRange sigma, AprioriConstants constants,
                           std::optional<double> p0_fraction)
    : kind_(kind), boundary_(std::move(boundary)), sigma_(sigma), constants_(constants) {
  if (!(constants_.r0 > 0.0)) throw InvalidInputError("domain: r0 must be positive");
  if (constants_.M0 < 0.5) throw InvalidInputError("domain: M0 must be >= 1/2");
  if (!(constants_.M1 > 0.0)) throw InvalidInputError("domain: M1 must be positive");
  if (!(constants_.delta0 > 0.0 && constants_.delta0 < 1.0)) throw InvalidInputError("domain: delta0 must lie in (0,1)");
  if (!(constants_.distance_step > 0.0)) throw InvalidInputError("domain: distance step must be positive");
  if (!(sigma_.length_fraction() > 0.0)) throw InvalidInputError("domain: measurement arc is empty");
  p0_fraction_ = wrap01(p0_fraction.value_or(sigma_.at(0.5)));
  polyline_ = Polyline(boundary_.sample(samples_for(boundary_, constants_.distance_step)));
}

StarCurve PlanarDomain::smooth_polygon(const std::vector<Vec2>& vertices, int modes) {
  if (vertices.size() < 3) throw InvalidInputError("polygon: need at least 3 vertices");
  if (modes < 1) throw InvalidInputError("polygon: smoothing needs at least one mode");
  Vec2 c = Vec2::Zero();
  for (const auto& v : vertices) c += v;
  c /= static_cast<double>(vertices.size());
  const int n = 1024;
  std::vector<double> r(n);
  const std::size_t m = vertices.size();
  for (int j = 0; j < n; ++j) {
    const double th = kTwoPi * j / n;
    const Vec2 d(std::cos(th), std::sin(th));
    int hits = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const Vec2 a = vertices[i] - c;
      const Vec2 e = vertices[(i + 1) % m] - vertices[i];
      const double den = d.x() * e.y() - d.y() * e.x();
      if (std::abs(den) < 1e-14) continue;
      const double t = (a.x() * e.y() - a.y() * e.x()) / den;   // ray parameter
      const double u = (a.x() * d.y() - a.y() * d.x()) / den;   // edge parameter
      if (t > 0.0 && u >= 0.0 && u < 1.0) {
        ++hits;
        best = t;
      }
    }
    if (hits != 1) throw GeometryError("polygon: not star-shaped about its vertex centroid");
    r[j] = best;
  }
  const auto coef = fourier::coefficients(r);
  std::vector<double> out{coef[0].real()};
  for (int k = 1; k <= modes; ++k) {
    // Lanczos sigma factor damps the Gibbs overshoot at the corners.
    const double x = std::numbers::pi * k / (modes + 1);
    const double sigma = std::sin(x) / x;
    out.push_back(2.0 * coef[k].real() * sigma);
    out.push_back(-2.0 * coef[k].imag() * sigma);
  }
  return StarCurve(c, out);
}

PlanarDomain PlanarDomain::from_polygon(const std::vector<Vec2>& vertices, int modes, ArcRange sigma,
                                        AprioriConstants constants, std::optional<double> p0_fraction) {
  PlanarDomain d(BoundaryKind::polygon_smoothed, smooth_polygon(vertices, modes), sigma, constants, p0_fraction);
  d.polygon_vertices_ = vertices;
  d.polygon_modes_ = modes;
  return d;
}

Vec2 PlanarDomain::point_at(double fraction) const { return boundary_.point(boundary_.theta_at_fraction(fraction)); }

Vec2 PlanarDomain::normal_at(double fraction) const {
  return boundary_.outward_normal(boundary_.theta_at_fraction(fraction));
}

Vec2 PlanarDomain::tangent_at(double fraction) const {
  return boundary_.derivative(boundary_.theta_at_fraction(fraction)).normalized();
}

double PlanarDomain::diameter() const {
  const auto pts = boundary_.sample(512);
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, (pts[i] - pts[j]).squaredNorm());
  }
  return std::sqrt(d);
}

StarInclusion::StarInclusion(StarCurve curve, double sampling_step)
    : curve_(std::move(curve)), step_(sampling_step) {
  if (!(step_ > 0.0)) throw InvalidInputError("inclusion: sampling step must be positive");
  polyline_ = Polyline(curve_.sample(samples_for(curve_, step_)));
}

StarInclusion StarInclusion::from_parameters(const std::vector<double>& params, double sampling_step) {
  if (params.size() < 3 || params.size() % 2 == 0) {
    throw InvalidInputError("inclusion: parameters are (cx, cy, a0, a1, b1, ...)");
  }
  return StarInclusion(StarCurve(Vec2(params[0], params[1]), std::vector<double>(params.begin() + 2, params.end())),
                       sampling_step);
}

std::vector<double> StarInclusion::parameters() const {
  std::vector<double> p{curve_.center().x(), curve_.center().y()};
  p.insert(p.end(), curve_.coefficients().begin(), curve_.coefficients().end());
  return p;
}

bool AprioriReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AprioriCheck& AprioriReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw InvalidInputError("a-priori report has no check named '" + name + "'");
}

std::string AprioriReport::failures() const {
  std::ostringstream out;
  for (const auto& c : checks) {
    if (c.passed) continue;
    out << (out.tellp() > 0 ? "; " : "") << c.name << ": measured " << c.measured << ", required " << c.relation
        << " " << c.threshold;
  }
  return out.str();
}

double curvature_regularity_proxy(const StarCurve& curve, int samples) {
  const double ds = curve.perimeter() / samples;
  std::vector<double> k(samples);
  for (int j = 0; j < samples; ++j) {
    k[j] = curve.curvature(curve.theta_at_fraction(static_cast<double>(j) / samples));
  }
  double proxy = 0.0;
  std::vector<double> cur = k;
  for (int order = 0; order <= 4; ++order) {
    double m = 0.0;
    for (double v : cur) m = std::max(m, std::abs(v));
    proxy = std::max(proxy, m);
    std::vector<double> next(samples);
    for (int j = 0; j < samples; ++j) next[j] = (cur[(j + 1) % samples] - cur[j]) / ds;
    cur = std::move(next);
  }
  return proxy;
}

namespace {
AprioriCheck make_check(std::string name, double measured, std::string relation, double threshold) {
  AprioriCheck c{std::move(name), std::move(relation), measured, threshold, false};
  if (c.relation == "<=") c.passed = measured <= threshold;
  else if (c.relation == ">=") c.passed = measured >= threshold;
  else c.passed = measured == threshold;
  return c;
}
}  // namespace

AprioriReport check_apriori(const PlanarDomain& domain, const std::optional<StarInclusion>& inclusion) {
  const auto& k = domain.constants();
  if (domain.boundary_polyline().self_intersects()) throw GeometryError("domain boundary self-intersects");
  if (inclusion && inclusion->polyline().self_intersects()) throw GeometryError("inclusion boundary self-intersects");

  AprioriReport report;
  report.checks.push_back(make_check("bound_area", domain.diameter(), "<=", k.M1));

  if (inclusion) {
    const auto& pl = inclusion->polyline();
    double clearance = std::numeric_limits<double>::infinity();
    bool inside = domain.contains(inclusion->curve().center());
    for (const auto& p : pl.points()) {
      if (!domain.contains(p)) inside = false;
      clearance = std::min(clearance, domain.boundary_polyline().distance(p));
    }
    report.checks.push_back(make_check("compactness", inside ? clearance : -clearance, ">=", 1.0));
    report.checks.push_back(
        make_check("reg_D", curvature_regularity_proxy(inclusion->curve()), "<=", k.regularity_bound));
  }

  // large_enough: boundary points inside R_{r0, 2 M0 r0}(P0) must belong to Sigma.
  {
    const double f0 = domain.p0_fraction();
    const Vec2 p0 = domain.point_at(f0);
    const Vec2 t = domain.tangent_at(f0);
    const Vec2 nin = -domain.normal_at(f0);
    const auto n = samples_for(domain.boundary(), k.distance_step);
    const auto pts = domain.boundary_polyline().points();
    double outside = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const Vec2 d = pts[j] - p0;
      if (std::abs(d.dot(t)) < 1.0 && std::abs(d.dot(nin)) < 2.0 * k.M0) {
        if (!domain.sigma().contains(static_cast<double>(j) / static_cast<double>(n))) outside += 1.0;
      }
    }
    report.checks.push_back(make_check("large_enough", outside, "<=", 0.0));
  }

  report.checks.push_back(make_check("small_enough", domain.sigma().length_fraction(), "<=", 1.0 - k.delta0));
  return report;
}

namespace {
Vec2 read_point(const KeyValueDocument& doc, const std::string& key, const Vec2& fallback) {
  if (!doc.has(key)) return fallback;
  const auto v = doc.get_doubles(key);
  if (v.size() != 2) throw ConfigError(doc.source() + ": key '" + key + "' expects two numbers");
  return {v[0], v[1]};
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}
}  // namespace

GeometrySpec geometry_from_document(const KeyValueDocument& doc) {
  AprioriConstants k;
  k.r0 = doc.get_double("apriori.r0", k.r0);
  k.M0 = doc.get_double("apriori.M0", k.M0);
  k.M1 = doc.get_double("apriori.M1", k.M1);
  k.delta0 = doc.get_double("apriori.delta0", k.delta0);
  k.alpha = doc.get_double("apriori.alpha", k.alpha);
  k.regularity_bound = doc.get_double("apriori.regularity_bound", k.regularity_bound);
  k.distance_step = doc.get_double("distance.step", k.distance_step);
  ArcRange sigma{doc.get_double("sigma.begin", 0.0), doc.get_double("sigma.end", 0.5)};
  std::optional<double> p0;
  if (doc.has("sigma.p0")) p0 = doc.get_double("sigma.p0");

  const auto kind = boundary_kind_from_string(doc.get_string("boundary.type"));
  const Vec2 center = read_point(doc, "boundary.center", Vec2::Zero());
  try {
    std::optional<PlanarDomain> domain;
    switch (kind) {
      case BoundaryKind::circle:
        domain.emplace(kind, StarCurve::circle(center, doc.get_double("boundary.radius")), sigma, k, p0);
        break;
      case BoundaryKind::fourier_star:
        domain.emplace(kind, StarCurve(center, doc.get_doubles("boundary.coefficients")), sigma, k, p0);
        break;
      case BoundaryKind::polygon_smoothed: {
        const auto flat = doc.get_doubles("boundary.vertices");
        if (flat.size() < 6 || flat.size() % 2) throw ConfigError(doc.source() + ": boundary.vertices needs x,y pairs");
        std::vector<Vec2> verts;
        for (std::size_t i = 0; i < flat.size(); i += 2) verts.emplace_back(flat[i], flat[i + 1]);
        domain.emplace(PlanarDomain::from_polygon(verts, static_cast<int>(doc.get_int("boundary.modes", 16)), sigma, k, p0));
        break;
      }
    }
    std::optional<StarInclusion> inclusion;
    if (doc.has("inclusion.coefficients")) {
      inclusion.emplace(StarCurve(read_point(doc, "inclusion.center", Vec2::Zero()), doc.get_doubles("inclusion.coefficients")),
                        k.distance_step);
    }
    return {std::move(*domain), std::move(inclusion)};
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(doc.source() + ": " + e.what());
  }
}

GeometrySpec load_geometry(const std::filesystem::path& path) {
  return geometry_from_document(KeyValueDocument::load(path));
}

KeyValueDocument geometry_to_document(const PlanarDomain& domain, const std::optional<StarInclusion>& inclusion) {
  KeyValueDocument doc;
  doc.set("boundary.type", to_string(domain.kind()));
  const auto& b = domain.boundary();
  switch (domain.kind()) {
    case BoundaryKind::circle:
      doc.set("boundary.center", join({b.center().x(), b.center().y()}));
      doc.set("boundary.radius", b.coefficients()[0]);
      break;
    case BoundaryKind::fourier_star:
      doc.set("boundary.center", join({b.center().x(), b.center().y()}));
      doc.set("boundary.coefficients", join(b.coefficients()));
      break;
    case BoundaryKind::polygon_smoothed: {
      std::vector<double> flat;
      for (const auto& v : domain.polygon_vertices()) {
        flat.push_back(v.x());
        flat.push_back(v.y());
      }
      doc.set("boundary.vertices", join(flat));
      doc.set("boundary.modes", static_cast<double>(domain.polygon_modes()));
      break;
    }
  }
  const auto& k = domain.constants();
  doc.set("sigma.begin", domain.sigma().begin);
  doc.set("sigma.end", domain.sigma().end);
  doc.set("sigma.p0", domain.p0_fraction());
  doc.set("apriori.r0", k.r0);
  doc.set("apriori.M0", k.M0);
  doc.set("apriori.M1", k.M1);
  doc.set("apriori.delta0", k.delta0);
  doc.set("apriori.alpha", k.alpha);
  doc.set("apriori.regularity_bound", k.regularity_bound);
  doc.set("distance.step", k.distance_step);
  if (inclusion) {
    const auto& c = inclusion->curve();
    doc.set("inclusion.center", join({c.center().x(), c.center().y()}));
    doc.set("inclusion.coefficients", join(c.coefficients()));
  }
  return doc;
}

}  // namespace platelab::geometry
