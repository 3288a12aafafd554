#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "platelab/boundary_data/traces.hpp"
#include "platelab/core/stats.hpp"

namespace platelab::stability_lab {

using geometry::GridSpec;
using geometry::LevelSet;
using geometry::PlanarDomain;
using geometry::StarInclusion;
using geometry::Vec2;
using material::IsotropicPlate;
using plate_solver::CoupleField;
using plate_solver::DiscreteSolution;

// Trial values for the existential constants.
struct Trials {
  double c0 = 0.9;
  double c_bar = 0.25;
  double c_bar0 = 0.25;
  double s = 1.5;
  double C = 0.0;  // exponent constant in the three-spheres and boundary ratios
};

// ---- sweep -----------------------------------------------------------------

struct SweepSetup {
  PlanarDomain domain;
  IsotropicPlate plate;
  CoupleField couple;
  double resolution = 48.0;       // perturbed forward solves
  double data_resolution = 96.0;  // base (data) solve
  std::size_t trace_samples = 256;
  double noise = 0.0;             // relative noise on the base traces
  std::uint64_t seed = 0;         // noise seed of pair k is seed + k
  int jobs = 1;
  plate_solver::GridOptions grid{};
  plate_solver::SolverOptions solver{};
};

struct StabilityRecord {
  int pair_id = 0;
  double epsilon = 0.0;
  double epsilon_norm = 0.0;  // epsilon / (r0^2 surrogate)
  double delta = 0.0;
  double d = 0.0;
  double d_m = 0.0;
  double L1 = 0.0;
  double L2 = 0.0;
  double resolution = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string message;
  std::vector<double> perturbed;  // inclusion parameters
};

std::vector<StarInclusion> dilation_family(const StarInclusion& base, const std::vector<double>& sizes);
std::vector<StarInclusion> translation_family(const StarInclusion& base, const std::vector<double>& sizes,
                                              const Vec2& direction);

// One record per perturbation; a failing pair is flagged, the sweep goes on.
std::vector<StabilityRecord> sweep(const StarInclusion& base, const std::vector<StarInclusion>& perturbations,
                                   const SweepSetup& setup);

// int over ((Omega \ G) \ closure(D_i)) of |hess w_i|^2, G the component of
// Omega \ closure(D1 u D2) touching Sigma.
double cauchy_energy(const DiscreteSolution& solution, const StarInclusion& d1, const StarInclusion& d2);

void write_sweep_csv(const std::vector<StabilityRecord>& records, const std::filesystem::path& path);
std::vector<StabilityRecord> read_sweep_csv(const std::filesystem::path& path);

// ---- log law -----------------------------------------------------------------

struct LogLawFit {
  double C_fit = 0.0;
  double eta_fit = 0.0;
  double eta_ci95 = 0.0;
  double r2 = 0.0;
  double residual_rms = 0.0;
  int n_points = 0;
  int excluded = 0;
  std::vector<std::string> warnings;
};

// log delta = log C - eta log|log eps~| over records with 0 < eps~ < 1.
LogLawFit fit_log_law(const std::vector<StabilityRecord>& records);
std::string fit_json(const LogLawFit& fit);
// gnuplot script plotting delta against |log eps~| with the fitted law.
void write_plot_script(const std::filesystem::path& script, const std::filesystem::path& csv,
                       const std::optional<LogLawFit>& fit);

// ---- disc integrals ------------------------------------------------------------

// sum over nodes of (area of dual cell in the disc and all `sets`) * f(centroid).
double integrate_disc(const GridSpec& grid, const Vec2& center, double radius, std::span<const LevelSet> sets,
                      const std::function<double(const Vec2&)>& f, int subdivisions = 4);
// Over B_r(x) intersected with Omega \ closure(D).
double disc_hessian_l2(const DiscreteSolution& solution, const Vec2& center, double radius);
double disc_w2(const DiscreteSolution& solution, const Vec2& center, double radius);
// Distance from x to the boundary of Omega \ closure(D).
double clearance(const DiscreteSolution& solution, const Vec2& x);

// ---- three spheres ---------------------------------------------------------------

double theta0(double r1, double r2, double r3, double c0);

struct ThreeSpheresReport {
  double theta0 = 0.0;
  double i1 = 0.0, i2 = 0.0, i3 = 0.0;
  bool monotone = false;
  bool vanishing = false;
  double ratio = 0.0;  // i2 / (i1^theta0 i3^(1-theta0))
  double q = 0.0;      // ratio (r3/r1)^-C
};

ThreeSpheresReport verify_three_spheres(const DiscreteSolution& solution, const Vec2& x, double r1, double r2,
                                        double r3, const Trials& trials = {});

// ---- vanishing rates ------------------------------------------------------------------

struct ExponentFit {
  std::vector<double> radii;
  std::vector<double> integrals;
  std::vector<double> local;  // slopes between consecutive radii
  double exponent = 0.0;      // least-squares slope of log integral vs log r
  double r2 = 0.0;
  bool finite = false;
  bool vanishing = false;
  double B = 0.0;  // boundary only: i(r_max) / i(c_bar r0) (r0 / (c_bar r0))^C
};

ExponentFit fit_exponent(const std::vector<double>& radii, const std::vector<double>& integrals);
ExponentFit verify_fvr_interior(const DiscreteSolution& solution, const Vec2& x, const std::vector<double>& radii,
                                const Trials& trials = {});
// x is the point of the boundary of D at curve fraction `fraction`.
ExponentFit verify_fvr_boundary(const DiscreteSolution& solution, double fraction, const std::vector<double>& radii,
                                const Trials& trials = {});

// ---- propagation of smallness ----------------------------------------------------------

struct LpsLevel {
  double rho = 0.0;
  double m = 0.0;
  std::size_t centers = 0;
  bool skipped = false;
  std::string note;
};

struct LpsReport {
  std::vector<LpsLevel> levels;
  bool positive = false;
  double B_trial = 0.0;  // best exponent on the search grid
  stats::LinearFit fit;  // log m against (r0 / rho)^B_trial
  bool finite_fit = false;
  bool passed() const { return positive && finite_fit; }
};

// m(rho) = min over centers in (Omega \ closure(D))_{s rho} of
// int_{B_rho} |hess w|^2 / (r0^2 surrogate)^2.
LpsReport verify_lps(const DiscreteSolution& solution, const CoupleField& couple, const std::vector<double>& rhos,
                     const Trials& trials = {}, std::size_t max_centers = 400);

// ---- continuation ------------------------------------------------------------------------------

struct CauchyReport {
  std::vector<double> log_L;
  std::vector<double> log_log_eps;
  double spearman = 0.0;        // log L against log|log eps~|
  double spearman_delta = 0.0;  // L against delta
  int used = 0;
};

CauchyReport verify_cauchy_decay(const std::vector<StabilityRecord>& records);

}  // namespace platelab::stability_lab
