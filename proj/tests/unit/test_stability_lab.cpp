#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "json.hpp"
#include "platelab/core/errors.hpp"
#include "platelab/geometry/grid.hpp"
#include "platelab/stability_lab/stability.hpp"

using namespace platelab;
using namespace platelab::stability_lab;
using geometry::ArcRange;
using geometry::BoundaryKind;
using geometry::StarCurve;
using plate_solver::GridOptions;
using plate_solver::PlateGrid;

namespace {

constexpr double kPi = std::numbers::pi;
const IsotropicPlate kPlate = IsotropicPlate::constant(1.0, 1.0, std::cbrt(4.5));

PlanarDomain disc(double radius) {
  return PlanarDomain(BoundaryKind::circle, StarCurve::circle(Vec2::Zero(), radius), ArcRange{0.0, 0.5}, {});
}

DiscreteSolution sampled_field(const PlanarDomain& d, double res, const std::function<double(const Vec2&)>& f) {
  GridOptions o;
  o.resolution = res;
  DiscreteSolution s;
  s.grid = std::make_shared<PlateGrid>(plate_solver::build_grid(d, std::nullopt, o));
  const auto& spec = s.grid->spec;
  s.w.assign(spec.size(), std::numeric_limits<double>::quiet_NaN());
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      if (s.grid->kind[spec.index(i, j)] != plate_solver::NodeKind::inactive) s.w[spec.index(i, j)] = f(spec.node(i, j));
    }
  }
  return s;
}

DiscreteSolution solved(const PlanarDomain& d, const StarInclusion& inc, double res) {
  GridOptions o;
  o.resolution = res;
  auto g = std::make_shared<PlateGrid>(plate_solver::build_grid(d, inc, o));
  return plate_solver::solve_dirichlet_form(g, kPlate, plate_solver::default_couple(d, 1024));
}

SweepSetup small_sweep(const PlanarDomain& d, double res, double data_res) {
  SweepSetup s{d, kPlate, plate_solver::default_couple(d, 1024)};
  s.resolution = res;
  s.data_resolution = data_res;
  s.trace_samples = 128;
  return s;
}

StabilityRecord planted(int id, double eps_norm, double delta) {
  StabilityRecord r;
  r.pair_id = id;
  r.epsilon = r.epsilon_norm = eps_norm;
  r.delta = delta;
  return r;
}

}  // namespace

TEST(ThreeSpheres, ThetaExampleAndMonotonicity) {
  EXPECT_NEAR(theta0(1, 2, 4, 1), 0.25, 1e-15);
  for (int a = 1; a <= 9; ++a) {
    for (int b = 1; b <= 9; ++b) {
      const double r1 = 0.1, r3 = 1.0;
      const double r2 = 0.1 + 0.09 * a, r2b = r2 + 0.005;
      const double c0 = 0.5 + 0.05 * b;
      EXPECT_GT(theta0(r1, r2, r3, c0), theta0(r1, r2b, r3, c0));
      EXPECT_LT(theta0(r1, r2, r3, c0), theta0(r1, r2, r3, c0 + 0.01));
    }
  }
  EXPECT_THROW(theta0(1, 1, 2, 1), InvalidInputError);
  EXPECT_THROW(theta0(1, 3, 2, 1), InvalidInputError);
  EXPECT_THROW(theta0(1, 2, 3, 0), InvalidInputError);
}

TEST(DiscIntegrals, AreaAndHalfDiscOracle) {
  geometry::GridSpec g{Vec2(-2.0, -2.0), 1.0 / 64.0, 257, 257};
  const double r = 0.37;
  const Vec2 c(0.013, -0.021);
  EXPECT_NEAR(integrate_disc(g, c, r, {}, [](const Vec2&) { return 1.0; }), kPi * r * r, 1e-5);
  // x2^4 over the upper half disc: pi r^6 / 16.
  const std::vector<LevelSet> upper{[&](const Vec2& x) { return c.y() - x.y(); }};
  const double v = integrate_disc(g, c, r, upper, [&](const Vec2& x) { return std::pow(x.y() - c.y(), 4); });
  EXPECT_NEAR(v, kPi * std::pow(r, 6) / 16.0, 2e-3 * kPi * std::pow(r, 6) / 16.0);
}

TEST(VanishingRate, ModelFieldExponentSix) {
  geometry::GridSpec g{Vec2(-1.0, -1.0), 1.0 / 64.0, 129, 129};
  const std::vector<LevelSet> upper{[](const Vec2& x) { return -x.y(); }};
  const std::vector<double> radii{0.05, 0.0707, 0.1, 0.1414, 0.2};
  std::vector<double> values;
  for (double r : radii) {
    values.push_back(integrate_disc(g, Vec2::Zero(), r, upper, [](const Vec2& x) { return std::pow(x.y(), 4); }));
  }
  const auto fit = fit_exponent(radii, values);
  EXPECT_NEAR(fit.exponent, 6.0, 0.2);
  EXPECT_TRUE(fit.finite);
  EXPECT_TRUE(fit_exponent(radii, std::vector<double>(5, 0.0)).vanishing);
  EXPECT_THROW(fit_exponent({0.1, 0.05}, {1.0, 2.0}), InvalidInputError);
}

TEST(VanishingRate, PowerLawHessianInterior) {
  const auto d = disc(2.0);
  // hess w ~ |x - x0|^m with w = |x - x0|^(m+2): p = 2 + 2m.
  const Vec2 x0(0.3, -0.2);
  for (double m : {0.0, 1.0, 2.0}) {
    const auto s = sampled_field(d, 64, [&](const Vec2& x) {
      return m == 0.0 ? x.x() * x.x() + x.x() * x.y() : std::pow((x - x0).squaredNorm(), (m + 2) / 2);
    });
    const auto fit = verify_fvr_interior(s, x0, {0.1, 0.14, 0.2, 0.28, 0.4});
    EXPECT_NEAR(fit.exponent, 2.0 + 2.0 * m, m == 0.0 ? 1e-3 : 0.1) << "m = " << m;
  }
}

TEST(ThreeSpheres, ConstantHessianClosedForm) {
  const auto d = disc(2.0);
  const auto s = sampled_field(d, 64, [](const Vec2& x) { return x.x() * x.x() - 0.5 * x.x() * x.y() + 2 * x.y() * x.y(); });
  const double r1 = 0.1, r2 = 0.25, r3 = 0.6;
  const auto rep = verify_three_spheres(s, Vec2(0.1, 0.1), r1, r2, r3);
  const double th = theta0(r1, r2, r3, 0.9);
  const double expected = r2 * r2 / (std::pow(r1, 2 * th) * std::pow(r3, 2 * (1 - th)));
  EXPECT_NEAR(rep.ratio, expected, 2e-3 * expected);
  EXPECT_TRUE(rep.monotone);
  EXPECT_FALSE(rep.vanishing);
  EXPECT_THROW(verify_three_spheres(s, Vec2(1.5, 0.0), r1, r2, r3), GeometryError);
  const auto zero = sampled_field(d, 32, [](const Vec2& x) { return 1.0 + x.x(); });
  EXPECT_TRUE(verify_three_spheres(zero, Vec2::Zero(), r1, r2, r3).vanishing);
}

TEST(LogLaw, PlantedLawRoundTrip) {
  std::vector<StabilityRecord> records;
  for (int k = 0; k < 8; ++k) {
    const double e = std::pow(10.0, -2.0 - k);
    records.push_back(planted(k, e, 2.0 * std::pow(std::abs(std::log(e)), -0.5)));
  }
  const auto fit = fit_log_law(records);
  EXPECT_NEAR(fit.C_fit, 2.0, 1e-6);
  EXPECT_NEAR(fit.eta_fit, 0.5, 1e-6);
  EXPECT_NEAR(fit.r2, 1.0, 1e-9);
  EXPECT_EQ(fit.n_points, 8);

  std::vector<StabilityRecord> flat;
  for (int k = 0; k < 6; ++k) flat.push_back(planted(k, std::pow(10.0, -1.0 - k), 0.3));
  EXPECT_NEAR(fit_log_law(flat).eta_fit, 0.0, 1e-12);

  records.push_back(planted(8, 1.5, 0.1));
  const auto excl = fit_log_law(records);
  EXPECT_EQ(excl.excluded, 1);
  EXPECT_EQ(excl.warnings.size(), 1u);
  EXPECT_NEAR(excl.eta_fit, 0.5, 1e-6);
  records.resize(4);
  EXPECT_THROW(fit_log_law(records), UnderdeterminedError);
  const auto j = nlohmann::json::parse(fit_json(fit));
  EXPECT_NEAR(j["eta_fit"].get<double>(), 0.5, 1e-6);
}

TEST(Sweep, CsvRoundTripAndPlotScript) {
  std::vector<StabilityRecord> records{planted(0, 1e-3, 0.02), planted(1, 2e-3, 0.04)};
  records[1].failed = true;
  records[1].epsilon = records[1].epsilon_norm = std::numeric_limits<double>::quiet_NaN();
  const auto dir = std::filesystem::temp_directory_path();
  write_sweep_csv(records, dir / "platelab_sweep_test.csv");
  const auto back = read_sweep_csv(dir / "platelab_sweep_test.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].epsilon, 1e-3);
  EXPECT_EQ(back[0].delta, 0.02);
  EXPECT_TRUE(back[1].failed);
  write_plot_script(dir / "platelab_sweep_test.gp", dir / "platelab_sweep_test.csv", std::nullopt);
  EXPECT_TRUE(std::filesystem::exists(dir / "platelab_sweep_test.gp"));
  std::filesystem::remove(dir / "platelab_sweep_test.csv");
  std::filesystem::remove(dir / "platelab_sweep_test.gp");
}

TEST(Sweep, DilationFamilyInvariants) {
  const auto d = disc(2.0);
  const auto base = StarInclusion::from_parameters({0.0, 0.0, 0.5});
  const std::vector<double> sizes{0.0, 0.05, 0.1, 0.15, 0.2};
  auto setup = small_sweep(d, 24, 24);
  const auto records = sweep(base, dilation_family(base, sizes), setup);
  ASSERT_EQ(records.size(), sizes.size());
  EXPECT_LE(records[0].epsilon, 1e-9 * records[1].epsilon);
  EXPECT_EQ(records[0].delta, 0.0);
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    EXPECT_FALSE(r.failed) << r.message;
    EXPECT_EQ(r.pair_id, static_cast<int>(k));
    EXPECT_GE(r.epsilon, 0.0);
    EXPECT_LE(r.d_m, r.d + 1e-12);
    EXPECT_NEAR(r.delta, sizes[k], 1e-3);
    if (k > 0) {
      EXPECT_GT(r.epsilon, records[k - 1].epsilon);
      EXPECT_GT(r.L1 + r.L2, records[k - 1].L1 + records[k - 1].L2);
    }
  }
  EXPECT_LE(records[0].L1 + records[0].L2, 1e-6 * (records[1].L1 + records[1].L2));
  // Joint rescaling of the data leaves the normalized quantities unchanged.
  setup.couple = setup.couple.scaled(3.0);
  const auto scaled = sweep(base, dilation_family(base, {0.1}), setup);
  EXPECT_NEAR(scaled[0].epsilon, 3.0 * records[2].epsilon, 1e-8 * records[2].epsilon);
  EXPECT_NEAR(scaled[0].epsilon_norm, records[2].epsilon_norm, 1e-8 * records[2].epsilon_norm);
  EXPECT_NEAR(scaled[0].L2, 9.0 * records[2].L2, 1e-8 * records[2].L2);
  // Concurrency does not change the records.
  setup.couple = setup.couple.scaled(1.0 / 3.0);
  setup.jobs = 3;
  const auto parallel = sweep(base, dilation_family(base, sizes), setup);
  for (std::size_t k = 0; k < records.size(); ++k) EXPECT_NEAR(parallel[k].epsilon, records[k].epsilon, 1e-12 * records[k].epsilon + 1e-300);
  const auto cauchy = verify_cauchy_decay(records);
  EXPECT_GE(cauchy.spearman_delta, 0.9);
}

TEST(Sweep, RejectsInadmissiblePerturbation) {
  const auto d = disc(2.0);
  const auto base = StarInclusion::from_parameters({0.0, 0.0, 0.5});
  EXPECT_THROW(sweep(base, dilation_family(base, {0.9}), small_sweep(d, 16, 16)), GeometryError);
}

TEST(SolvedInstance, BoundaryRateLpsAndPurity) {
  const auto d = disc(2.0);
  const auto inc = StarInclusion::from_parameters({0.1, -0.05, 0.5, 0.04, -0.03});
  const auto s = solved(d, inc, 48);
  const std::vector<double> ladder{0.06, 0.085, 0.12, 0.17, 0.24};
  for (double f : {0.0, 0.25, 0.5, 0.75}) {
    const auto fit = verify_fvr_boundary(s, f, ladder);
    EXPECT_GE(fit.exponent, 5.5) << "fraction " << f;
    EXPECT_LE(fit.exponent, 40.0) << "fraction " << f;
    EXPECT_TRUE(std::isfinite(fit.B));
  }
  const auto lps = verify_lps(s, plate_solver::default_couple(d, 1024), {0.05, 0.1, 0.2, 0.4}, {}, 100);
  EXPECT_TRUE(lps.positive);
  EXPECT_TRUE(lps.finite_fit);
  EXPECT_GE(lps.B_trial, 0.5);
  EXPECT_LE(lps.B_trial, 4.0);
  const Vec2 x(-1.0, 0.3);
  double prev = 0.0;
  for (double rho : {0.05, 0.1, 0.2, 0.4}) {
    const double v = disc_hessian_l2(s, x, rho);
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_EQ(disc_hessian_l2(s, x, 0.3), disc_hessian_l2(s, x, 0.3));
  const auto a = verify_three_spheres(s, x, 0.1, 0.2, 0.4), b = verify_three_spheres(s, x, 0.1, 0.2, 0.4);
  EXPECT_EQ(a.q, b.q);
  EXPECT_TRUE(a.monotone);
}
