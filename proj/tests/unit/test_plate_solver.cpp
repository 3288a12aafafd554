#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "platelab/core/errors.hpp"
#include "platelab/plate_solver/solver.hpp"

using namespace platelab;
using namespace platelab::plate_solver;
using geometry::ArcRange;
using geometry::BoundaryKind;
using geometry::StarCurve;
using material::IsotropicPlate;
using material::Mat2;

namespace {

PlanarDomain disc_domain(double radius, Vec2 center = Vec2::Zero()) {
  return PlanarDomain(BoundaryKind::circle, StarCurve::circle(center, radius), ArcRange{0.0, 0.5}, {});
}

std::shared_ptr<const PlateGrid> make_grid(const PlanarDomain& d, const std::optional<StarInclusion>& inc, double res) {
  GridOptions o;
  o.resolution = res;
  return std::make_shared<PlateGrid>(build_grid(d, inc, o));
}

const IsotropicPlate kPlate = IsotropicPlate::constant(1.0, 1.0, 0.1);

Mat2 hessian_x1_squared(const Vec2&) {
  Mat2 H;
  H << 2, 0, 0, 0;
  return H;
}

// Weighted L2 distance to f on the domain mask after removing the best affine fit.
double gauge_removed_error(const DiscreteSolution& s, const std::function<double(const Vec2&)>& f) {
  DiscreteSolution e = s;
  const auto& spec = s.grid->spec;
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      const auto k = spec.index(i, j);
      if (std::isfinite(e.w[k])) e.w[k] -= f(spec.node(i, j));
    }
  }
  Affine a = affine_projection(e, s.grid->nodes);
  for (auto& c : a.c) c = -c;
  e.add_affine(a);
  double acc = 0.0;
  for (std::size_t k = 0; k < e.w.size(); ++k) {
    if (s.grid->nodes.weight[k] > 0.0) acc += s.grid->nodes.weight[k] * spec.h * spec.h * e.w[k] * e.w[k];
  }
  return std::sqrt(acc);
}

// Clamped annulus a < r < b: w = r^2 - 2 a^2 log r + const, w = w' = 0 at r = a.
struct Annulus {
  double a, b;
  Vec2 c;
  double w(const Vec2& x) const {
    const double r = (x - c).norm();
    return r * r - 2 * a * a * std::log(r) - a * a + 2 * a * a * std::log(a);
  }
  Mat2 hessian(const Vec2& x) const {
    const Vec2 d = x - c;
    const double r = d.norm();
    const Vec2 n = d / r, t(-n.y(), n.x());
    return (2 + 2 * a * a / (r * r)) * n * n.transpose() + (2 - 2 * a * a / (r * r)) * t * t.transpose();
  }
};

double relative_error(const DiscreteSolution& s, const std::function<double(const Vec2&)>& f) {
  const auto& spec = s.grid->spec;
  double e = 0.0, n = 0.0;
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      const auto k = spec.index(i, j);
      const double wt = s.grid->nodes.weight[k];
      if (wt <= 0.0) continue;
      const double v = f(spec.node(i, j));
      e += wt * (s.w[k] - v) * (s.w[k] - v);
      n += wt * v * v;
    }
  }
  return std::sqrt(e / n);
}

}  // namespace

TEST(Surrogate, SingleModeOnUnitCircle) {
  const auto d = disc_domain(1.0);
  const std::size_t n = 512;
  for (int k = 0; k <= 6; ++k) {
    // Cartesian M = (A cos k theta, 0) with unit L2 norm on the unit circle.
    const double A = k == 0 ? 1.0 / std::sqrt(2 * std::numbers::pi) : 1.0 / std::sqrt(std::numbers::pi);
    std::vector<double> mn(n), mt(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double f = static_cast<double>(j) / n;
      const double theta = 2 * std::numbers::pi * f;
      const Vec2 m(A * std::cos(k * theta), 0.0);
      mn[j] = m.dot(d.normal_at(f));
      mt[j] = m.dot(d.tangent_at(f));
    }
    const CoupleField c(mn, mt);
    EXPECT_NEAR(l2_norm(c, d), 1.0, 1e-9);
    EXPECT_NEAR(h_minus_half_surrogate(c, d), std::pow(1.0 + k * k, -0.25), 1e-9) << "k=" << k;
  }
  EXPECT_EQ(h_minus_half_surrogate(CoupleField(std::vector<double>(64, 0.0), std::vector<double>(64, 0.0)), d), 0.0);
  EXPECT_THROW(CoupleField({}, {}), InvalidInputError);
}

TEST(Couple, DefaultSatisfiesInvariants) {
  const auto d = disc_domain(2.5);
  const auto c = default_couple(d);
  const auto v = validate_couple(c, d);
  EXPECT_TRUE(v.support_in_sigma);
  EXPECT_TRUE(v.compatible) << v.resultant_relative;
  EXPECT_TRUE(v.nontrivial);
  EXPECT_TRUE(v.frequency_ok) << v.frequency_ratio;
  EXPECT_TRUE(std::all_of(c.m_tau().begin(), c.m_tau().end(), [](double x) { return std::abs(x) < 1.0; }));
  EXPECT_LT(v.resultant.norm(), 1e-12);

  const auto manufactured = couple_from_hessian(d, kPlate, hessian_x1_squared, 256);
  const auto vm = validate_couple(manufactured, d);
  EXPECT_FALSE(vm.support_in_sigma);
  EXPECT_TRUE(vm.compatible);
  EXPECT_FALSE(validate_couple(c.scaled(0.0), d).nontrivial);
}

TEST(Couple, CsvRoundTripAndResampling) {
  const auto d = disc_domain(2.0);
  const auto c = default_couple(d, 128);
  const auto path = std::filesystem::temp_directory_path() / "platelab_couple_test.csv";
  write_couple_csv(c, path);
  const auto back = read_couple_csv(path);
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t j = 0; j < c.size(); ++j) {
    EXPECT_EQ(back.m_n()[j], c.m_n()[j]);
    EXPECT_EQ(back.m_tau()[j], c.m_tau()[j]);
  }
  // Non-uniform samples are interpolated linearly between knots.
  {
    std::ofstream out(path);
    out << "arc_length_fraction,m_n,m_tau\n0,0,1\n0.2,2,1\n0.5,5,1\n0.9,1,1\n";
  }
  const auto r = read_couple_csv(path);
  ASSERT_EQ(r.size(), 4u);
  EXPECT_NEAR(r.m_n()[1], 2.5, 1e-12);  // fraction 0.25
  EXPECT_NEAR(r.m_n()[3], 2.5, 1e-12);  // fraction 0.75
  std::filesystem::remove(path);
  EXPECT_THROW(read_couple_csv(path), ConfigError);
}

TEST(BuildGrid, Classification) {
  const auto d = disc_domain(2.5);
  const StarInclusion inc(StarCurve::circle(Vec2(0.1, 0.0), 0.6));
  const auto g = build_grid(d, inc, {.resolution = 64});
  EXPECT_GE(g.clearance * g.spec.resolution(), 64.0);
  EXPECT_GT(g.count(NodeKind::clamped), 0u);
  EXPECT_GT(g.count(NodeKind::ghost), 0u);
  EXPECT_NEAR(g.nodes.area(), std::numbers::pi * (2.5 * 2.5 - 0.36), 2e-4);
  const auto none = build_grid(d, std::nullopt, {.resolution = 16});
  EXPECT_EQ(none.count(NodeKind::clamped), 0u);
  EXPECT_TRUE(std::isinf(none.clearance));

  const StarInclusion close(StarCurve::circle(Vec2(1.2, 0.0), 0.6));
  EXPECT_THROW(build_grid(d, close, {.resolution = 16}), GeometryError);
  const StarInclusion outside(StarCurve::circle(Vec2(3.0, 0.0), 0.6));
  EXPECT_THROW(build_grid(d, outside, {.resolution = 16}), GeometryError);
  EXPECT_THROW(build_grid(d, inc, {.resolution = 4}), ResolutionError);
}

TEST(Assembly, SymmetricAndNonnegative) {
  const auto d = disc_domain(2.2);
  const StarInclusion inc(StarCurve(Vec2(0.2, -0.1), {0.5, 0.05, -0.03}));
  const auto g = make_grid(d, inc, 16);
  const auto plate = IsotropicPlate(material::Expression::parse("0.5 + 0.1*x1"),
                                    material::Expression::parse("1 + 0.2*sin(pi*x1)"), 0.1);
  const auto sys = assemble_system(g, plate);
  const SparseMatrix Kt = sys.K.transpose();
  EXPECT_LE((sys.K - Kt).norm(), 1e-14 * sys.K.norm());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  const auto n = sys.K.rows();
  double min_ratio = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd u(n), v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      u[i] = nd(rng);
      v[i] = nd(rng);
    }
    const double uv = u.dot(sys.K * v), vu = v.dot(sys.K * u);
    EXPECT_NEAR(uv, vu, 1e-12 * (std::abs(uv) + sys.K.norm()));
    EXPECT_GE(u.dot(sys.K * u), 0.0);
    DiscreteSolution s;
    s.grid = g;
    s.w.assign(g->spec.size(), 0.0);
    for (std::size_t k = 0; k < s.w.size(); ++k) {
      if (g->dof[k] >= 0) s.w[k] = u[g->dof[k]];
    }
    min_ratio = std::min(min_ratio, u.dot(sys.K * u) / hessian_l2(s, g->nodes));
  }
  EXPECT_GT(min_ratio, 0.0);
  std::cout << "measured coercivity constant (random vectors): " << min_ratio << "\n";
}

TEST(Solve, ZeroDataGivesZero) {
  const auto d = disc_domain(2.2);
  const StarInclusion inc(StarCurve::circle(Vec2::Zero(), 0.5));
  const auto g = make_grid(d, inc, 16);
  const auto s = solve_dirichlet_form(g, kPlate, default_couple(d).scaled(0.0));
  for (double v : s.w) {
    if (std::isfinite(v)) EXPECT_EQ(v, 0.0);
  }
  const auto r = solve_rigid_form(g, kPlate, default_couple(d).scaled(0.0));
  for (double c : r.gauge.c) EXPECT_EQ(c, 0.0);
}

TEST(Solve, ManufacturedQuadraticConverges) {
  const auto d = disc_domain(1.0, Vec2(0.03, -0.02));
  const auto c = couple_from_hessian(d, kPlate, hessian_x1_squared);
  std::vector<double> err;
  for (double res : {32.0, 64.0, 128.0}) {
    const auto s = solve_dirichlet_form(make_grid(d, std::nullopt, res), kPlate, c);
    EXPECT_TRUE(s.info.gauge_fixed);
    EXPECT_LT(s.info.compatibility, 1e-12);
    err.push_back(gauge_removed_error(s, [](const Vec2& x) { return x.x() * x.x(); }));
  }
  const double o1 = std::log2(err[0] / err[1]), o2 = std::log2(err[1] / err[2]);
  EXPECT_GE(o1, 1.8);
  EXPECT_GE(o2, 1.8);
  EXPECT_LT(err[2], 1e-5);
}

TEST(Solve, IncompatibleDataWithoutInclusionFails) {
  const auto d = disc_domain(1.0);
  std::vector<double> mn(256, 1.0), mt(256, 0.0);
  for (std::size_t j = 0; j < 256; ++j) mn[j] = std::cos(2 * std::numbers::pi * j / 256.0);  // net force along x1
  EXPECT_THROW(solve_dirichlet_form(make_grid(d, std::nullopt, 16), kPlate, CoupleField(mn, mt)), SolverError);
}

TEST(Solve, ClampedAnnulusMatchesExactSolution) {
  const Annulus ex{0.5, 2.5, Vec2(0.013, -0.021)};
  const auto d = disc_domain(ex.b, ex.c);
  const StarInclusion inc(StarCurve::circle(ex.c, ex.a));
  const auto c = couple_from_hessian(d, kPlate, [&](const Vec2& x) { return ex.hessian(x); });
  std::vector<double> err;
  for (double res : {16.0, 32.0}) {
    const auto s = solve_dirichlet_form(make_grid(d, inc, res), kPlate, c);
    err.push_back(relative_error(s, [&](const Vec2& x) { return ex.w(x); }));
  }
  EXPECT_LT(err[1], 1e-2);
  EXPECT_GE(std::log2(err[0] / err[1]), 1.8);
}

TEST(Solve, ClampedTraceAndWorkIdentity) {
  const auto d = disc_domain(2.2);
  const StarInclusion inc(StarCurve(Vec2(0.1, 0.05), {0.55, 0.05, 0.04, 0.02, 0.0}));
  const auto g = make_grid(d, inc, 24);
  const auto s = solve_dirichlet_form(g, kPlate, default_couple(d));
  double scale = 0.0;
  for (std::size_t k = 0; k < s.w.size(); ++k) {
    if (g->nodes.weight[k] > 0.0) scale = std::max(scale, std::abs(s.w[k]));
  }
  ASSERT_GT(scale, 0.0);
  const auto& curve = inc.curve();
  for (int p = 0; p < 200; ++p) {
    const double th = curve.theta_at_fraction(p / 200.0);
    const Vec2 x = curve.point(th);
    // Between constraint points the trace is interpolation-accurate, at them exact.
    EXPECT_LE(std::abs(s.value(x)), 1e-3 * scale);
  }
  EXPECT_LE(s.info.constraint_violation, 1e-10);
  EXPECT_NEAR(s.boundary_work, 2.0 * s.stored_energy, 1e-8 * std::abs(s.boundary_work));
  EXPECT_GT(s.stored_energy, 0.0);
}

TEST(Solve, Linearity) {
  const auto d = disc_domain(2.2);
  const StarInclusion inc(StarCurve::circle(Vec2(-0.1, 0.0), 0.5));
  const auto g = make_grid(d, inc, 16);
  const auto c1 = default_couple(d, 512);
  // Second couple: bump mirrored in the arc parameter, still inside Sigma.
  auto mn = c1.m_n(), mt = c1.m_tau();
  std::rotate(mn.begin(), mn.begin() + 20, mn.end());
  std::rotate(mt.begin(), mt.begin() + 20, mt.end());
  const CoupleField c2(mn, mt);
  const auto s1 = solve_dirichlet_form(g, kPlate, c1);
  const auto s2 = solve_dirichlet_form(g, kPlate, c2);
  const auto s12 = solve_dirichlet_form(g, kPlate, c1.plus(c2.scaled(-3.0)));
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < s1.w.size(); ++k) {
    if (!std::isfinite(s1.w[k])) continue;
    diff = std::max(diff, std::abs(s12.w[k] - (s1.w[k] - 3.0 * s2.w[k])));
    scale = std::max(scale, std::abs(s12.w[k]));
  }
  EXPECT_LE(diff, 1e-8 * scale);
}

TEST(Solve, RigidFormEquilibriumAndConsistency) {
  const auto d = disc_domain(2.2);
  const StarInclusion inc(StarCurve(Vec2(0.15, -0.05), {0.6, -0.06, 0.03}));
  const auto g = make_grid(d, inc, 32);
  const auto r = solve_rigid_form(g, kPlate, default_couple(d));
  EXPECT_TRUE(r.equilibrium_ok(1e-8)) << r.equilibrium[0] << " " << r.equilibrium[1] << " " << r.equilibrium[2];
  EXPECT_LE(r.consistency, 10.0 * 1e-10 * std::abs(r.dirichlet.stored_energy));
  // Deep inside D the rigid field is exactly the gauge.
  for (std::size_t k = 0; k < r.solution.w.size(); ++k) {
    if (g->kind[k] != NodeKind::clamped) continue;
    const Vec2 x = g->spec.node(static_cast<int>(k % g->spec.nx), static_cast<int>(k / g->spec.nx));
    EXPECT_NEAR(r.solution.w[k], r.gauge(x), 1e-12);
  }
  // The rigid field is L2-orthogonal to affine functions on the mask.
  const auto p = affine_projection(r.solution, g->nodes);
  for (double c : p.c) EXPECT_NEAR(c, 0.0, 1e-10);
  EXPECT_THROW(solve_rigid_form(make_grid(d, std::nullopt, 16), kPlate, default_couple(d)), InvalidInputError);
}

TEST(Energy, QuadraticFieldExamples) {
  // nu = 0 and B = 1: lambda = 0, mu = 1, thickness^3 = 6.
  const auto plate = IsotropicPlate::constant(0.0, 1.0, std::cbrt(6.0));
  ASSERT_NEAR(plate.sample(Vec2::Zero()).B, 1.0, 1e-12);
  const auto d = disc_domain(2.0);
  const auto g = make_grid(d, std::nullopt, 32);
  DiscreteSolution s;
  s.grid = g;
  s.w.assign(g->spec.size(), 0.0);
  for (int j = 0; j < g->spec.ny; ++j) {
    for (int i = 0; i < g->spec.nx; ++i) {
      const Vec2 x = g->spec.node(i, j);
      s.w[g->spec.index(i, j)] = x.x() * x.x();
    }
  }
  const geometry::LevelSet sets[] = {geometry::inside_disc(Vec2(0.1, 0.2), 1.0 / std::sqrt(std::numbers::pi))};
  const auto unit = geometry::region_from_level_sets(g->spec, sets);
  ASSERT_NEAR(unit.area(), 1.0, 1e-4);
  EXPECT_NEAR(energy(s, plate, unit), 4.0 * unit.area(), 1e-10);
  EXPECT_NEAR(hessian_l2(s, unit), 4.0 * unit.area(), 1e-10);
  EXPECT_EQ(energy(s, plate, RegionMask(g->spec)), 0.0);
  s.add_affine(Affine{{1.0, -2.0, 3.0}});
  EXPECT_NEAR(energy(s, plate, unit), 4.0 * unit.area(), 1e-9);
  for (auto& v : s.w) v = 0.0;
  s.add_affine(Affine{{1.0, -2.0, 3.0}});
  EXPECT_NEAR(energy(s, plate, unit), 0.0, 1e-9);
  EXPECT_NEAR(hessian_l2(s, unit), 0.0, 1e-9);
  const geometry::LevelSet small[] = {geometry::inside_disc(Vec2(0.1, 0.2), 0.3)};
  for (auto& v : s.w) v = 0.0;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (auto& v : s.w) v = nd(rng);
  EXPECT_LE(hessian_l2(s, geometry::region_from_level_sets(g->spec, small)), hessian_l2(s, unit));
}

TEST(EnergyEstimate, ScaleInvariantAndZeroDataRejected) {
  const auto d = disc_domain(2.2);
  const StarInclusion inc(StarCurve::circle(Vec2::Zero(), 0.5));
  const auto g = make_grid(d, inc, 16);
  const auto c = default_couple(d);
  const auto e1 = verify_energy_estimate(solve_dirichlet_form(g, kPlate, c), c);
  const auto e2 = verify_energy_estimate(solve_dirichlet_form(g, kPlate, c.scaled(7.0)), c.scaled(7.0));
  EXPECT_NEAR(e1.ratio, e2.ratio, 1e-8 * e1.ratio);
  EXPECT_GT(e1.ratio, 0.0);
  const auto zero = c.scaled(0.0);
  EXPECT_THROW(verify_energy_estimate(solve_dirichlet_form(g, kPlate, zero), zero), InvalidInputError);
  const auto rep = verify_energy_estimate({{16, 1, 1, 5.0}, {32, 1, 1, 5.2}});
  EXPECT_TRUE(rep.passed());
  EXPECT_FALSE(verify_energy_estimate({{16, 1, 1, 5.0}, {32, 1, 1, 2e4}}).bounded);
  EXPECT_FALSE(verify_energy_estimate({{16, 1, 1, 5.0}, {32, 1, 1, 7.0}}).stable);
}

TEST(SolutionDump, HeaderAndRows) {
  const auto d = disc_domain(2.2);
  const StarInclusion inc(StarCurve::circle(Vec2::Zero(), 0.5));
  const auto g = make_grid(d, inc, 12);
  const auto r = solve_rigid_form(g, kPlate, default_couple(d));
  const auto path = std::filesystem::temp_directory_path() / "platelab_solution_test.csv";
  write_solution(r.solution, path);
  std::ifstream in(path);
  std::string header, columns;
  std::getline(in, header);
  std::getline(in, columns);
  EXPECT_EQ(header.rfind("# {", 0), 0u);
  EXPECT_NE(header.find("\"gauge\""), std::string::npos);
  EXPECT_NE(header.find("\"relative_tolerance\""), std::string::npos);
  EXPECT_EQ(columns, "x1,x2,kind,w");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, g->spec.size() - g->count(NodeKind::inactive));
  std::filesystem::remove(path);
}
