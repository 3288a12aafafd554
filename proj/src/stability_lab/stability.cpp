#include "platelab/stability_lab/stability.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "platelab/core/errors.hpp"
#include "platelab/core/keyvalue.hpp"
#include "platelab/geometry/distances.hpp"
#include "platelab/geometry/grid.hpp"

namespace platelab::stability_lab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double normalization(const PlanarDomain& domain, const CoupleField& couple) {
  const double r0 = domain.constants().r0;
  return r0 * r0 * plate_solver::h_minus_half_surrogate(couple, domain);
}

std::vector<LevelSet> region_sets(const DiscreteSolution& s) {
  std::vector<LevelSet> sets{geometry::inside_of(s.grid->domain.boundary())};
  if (s.grid->inclusion) sets.push_back(geometry::outside_of(s.grid->inclusion->curve()));
  return sets;
}

void check_ladder(const std::vector<double>& radii) {
  if (radii.size() < 2) throw UnderdeterminedError("radius ladder needs at least two radii");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0) || (k > 0 && !(radii[k] > radii[k - 1]))) {
      throw InvalidInputError("radius ladder must be positive and strictly increasing");
    }
  }
}

}  // namespace

// ---- sweep -----------------------------------------------------------------

std::vector<StarInclusion> dilation_family(const StarInclusion& base, const std::vector<double>& sizes) {
  std::vector<StarInclusion> out;
  for (double s : sizes) {
    auto p = base.parameters();
    p[2] += s;
    out.push_back(StarInclusion::from_parameters(p, base.sampling_step()));
  }
  return out;
}

std::vector<StarInclusion> translation_family(const StarInclusion& base, const std::vector<double>& sizes,
                                              const Vec2& direction) {
  if (!(direction.norm() > 0.0)) throw InvalidInputError("translation direction must be nonzero");
  const Vec2 u = direction.normalized();
  std::vector<StarInclusion> out;
  for (double s : sizes) {
    auto p = base.parameters();
    p[0] += s * u.x();
    p[1] += s * u.y();
    out.push_back(StarInclusion::from_parameters(p, base.sampling_step()));
  }
  return out;
}

double cauchy_energy(const DiscreteSolution& solution, const StarInclusion& d1, const StarInclusion& d2) {
  const auto& g = *solution.grid;
  const auto G = geometry::connected_component_touching(g.domain, d1, d2, g.spec);
  if (G.empty()) throw GeometryError("continuation region G is empty");
  // Area fractions of G recomputed with the same clipping as the region.
  std::vector<LevelSet> sets{geometry::inside_of(g.domain.boundary()), geometry::outside_of(d1.curve())};
  if (d1.parameters() != d2.parameters()) sets.push_back(geometry::outside_of(d2.curve()));
  const auto both = geometry::region_from_level_sets(g.spec, sets, g.options.subdivisions);
  auto region = geometry::domain_region(g.domain, g.spec, g.inclusion);
  // Cut cells whose node lies outside the free set join G through a neighbour.
  const auto& spec = g.spec;
  auto in_g = [&](int i, int j) {
    const auto k = spec.index(i, j);
    if (G.weight[k] > 0.0) return true;
    if (!(both.weight[k] > 0.0)) return false;
    const Vec2 x = spec.node(i, j);
    if (g.domain.contains(x) && !d1.contains(x) && !d2.contains(x)) return false;
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        if (spec.valid(i + di, j + dj) && G.weight[spec.index(i + di, j + dj)] > 0.0) return true;
      }
    }
    return false;
  };
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      const auto k = spec.index(i, j);
      if (in_g(i, j)) region.weight[k] = std::max(0.0, region.weight[k] - both.weight[k]);
    }
  }
  for (std::size_t k = 0; k < region.weight.size(); ++k) {
    if (region.weight[k] < 1e-12) region.weight[k] = 0.0;
  }
  if (region.empty()) return 0.0;
  return plate_solver::hessian_l2(solution, region);
}

std::vector<StabilityRecord> sweep(const StarInclusion& base, const std::vector<StarInclusion>& perturbations,
                                   const SweepSetup& setup) {
  for (std::size_t k = 0; k < perturbations.size(); ++k) {
    const auto report = geometry::check_apriori(setup.domain, perturbations[k]);
    if (!report.passed()) {
      throw GeometryError("perturbation " + std::to_string(k) + " fails a-priori checks: " + report.failures());
    }
  }
  auto solve = [&](const StarInclusion& inc, double resolution) {
    auto options = setup.grid;
    options.resolution = resolution;
    auto grid = std::make_shared<plate_solver::PlateGrid>(plate_solver::build_grid(setup.domain, inc, options));
    return plate_solver::solve_dirichlet_form(grid, setup.plate, setup.couple, setup.solver);
  };
  const auto base_solution = solve(base, setup.data_resolution);
  const auto base_traces = boundary_data::extract_traces(base_solution, setup.domain, setup.trace_samples);
  const double scale = normalization(setup.domain, setup.couple);

  std::vector<StabilityRecord> records(perturbations.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < perturbations.size(); k = next++) {
      auto& r = records[k];
      r.pair_id = static_cast<int>(k);
      r.resolution = setup.resolution;
      r.seed = setup.seed + k;
      r.perturbed = perturbations[k].parameters();
      try {
        const auto data = setup.noise > 0.0 ? boundary_data::add_noise(base_traces, setup.noise, r.seed) : base_traces;
        const auto s = solve(perturbations[k], setup.resolution);
        const auto t = boundary_data::extract_traces(s, setup.domain, setup.trace_samples);
        r.epsilon = boundary_data::gauge_min_misfit(data, t).epsilon;
        r.epsilon_norm = r.epsilon / scale;
        r.delta = geometry::hausdorff_distance(base, perturbations[k]).value;
        const auto cd = geometry::complement_distances(setup.domain, base, perturbations[k]);
        r.d = cd.d;
        r.d_m = cd.d_m;
        r.L1 = cauchy_energy(base_solution, base, perturbations[k]);
        r.L2 = cauchy_energy(s, base, perturbations[k]);
      } catch (const std::exception& e) {
        r.failed = true;
        r.message = e.what();
        r.epsilon = r.epsilon_norm = r.delta = r.d = r.d_m = r.L1 = r.L2 = kNaN;
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(setup.jobs, static_cast<int>(perturbations.size())));
  std::vector<std::thread> threads;
  for (int t = 1; t < jobs; ++t) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  return records;
}

void write_sweep_csv(const std::vector<StabilityRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << "pair_id,epsilon,epsilon_norm,delta,d,d_m,L1,L2,resolution,seed\n";
  for (const auto& r : records) {
    out << r.pair_id << ',' << format_double(r.epsilon) << ',' << format_double(r.epsilon_norm) << ','
        << format_double(r.delta) << ',' << format_double(r.d) << ',' << format_double(r.d_m) << ','
        << format_double(r.L1) << ',' << format_double(r.L2) << ',' << format_double(r.resolution) << ',' << r.seed
        << '\n';
  }
}

std::vector<StabilityRecord> read_sweep_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sweep file '" + path.string() + "'");
  std::vector<StabilityRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind("pair_id", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 10) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 10 columns");
    StabilityRecord r;
    try {
      r.pair_id = std::stoi(f[0]);
      double* v[] = {&r.epsilon, &r.epsilon_norm, &r.delta, &r.d, &r.d_m, &r.L1, &r.L2, &r.resolution};
      for (int c = 0; c < 8; ++c) *v[c] = std::stod(f[c + 1]);
      r.seed = std::stoull(f[9]);
    } catch (const std::logic_error&) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
    r.failed = std::isnan(r.epsilon);
    records.push_back(r);
  }
  return records;
}

// ---- log law -----------------------------------------------------------------

LogLawFit fit_log_law(const std::vector<StabilityRecord>& records) {
  LogLawFit fit;
  std::vector<double> x, y;
  for (const auto& r : records) {
    if (r.failed) {
      ++fit.excluded;
      fit.warnings.push_back("pair " + std::to_string(r.pair_id) + ": failed record excluded");
    } else if (!(r.epsilon_norm > 0.0 && r.epsilon_norm < 1.0)) {
      ++fit.excluded;
      fit.warnings.push_back("pair " + std::to_string(r.pair_id) + ": normalized misfit " +
                             format_double(r.epsilon_norm) + " outside (0, 1) excluded");
    } else if (!(r.delta > 0.0)) {
      ++fit.excluded;
      fit.warnings.push_back("pair " + std::to_string(r.pair_id) + ": zero distance excluded");
    } else {
      x.push_back(std::log(std::abs(std::log(r.epsilon_norm))));
      y.push_back(std::log(r.delta));
    }
  }
  fit.n_points = static_cast<int>(x.size());
  if (fit.n_points < 5) {
    throw UnderdeterminedError("log-law fit needs at least 5 usable records, got " + std::to_string(fit.n_points));
  }
  const auto lf = stats::linear_fit(x, y);
  fit.C_fit = std::exp(lf.intercept);
  fit.eta_fit = -lf.slope;
  fit.eta_ci95 = lf.slope_ci95();
  fit.r2 = lf.r2;
  fit.residual_rms = lf.residual_rms;
  return fit;
}

std::string fit_json(const LogLawFit& fit) {
  nlohmann::ordered_json j;
  j["C_fit"] = fit.C_fit;
  j["eta_fit"] = fit.eta_fit;
  j["eta_ci95"] = fit.eta_ci95;
  j["r2"] = fit.r2;
  j["residual_rms"] = fit.residual_rms;
  j["n_points"] = fit.n_points;
  j["excluded"] = fit.excluded;
  j["warnings"] = fit.warnings;
  return j.dump(2);
}

void write_plot_script(const std::filesystem::path& script, const std::filesystem::path& csv,
                       const std::optional<LogLawFit>& fit) {
  std::ofstream out(script);
  if (!out) throw ConfigError("cannot write '" + script.string() + "'");
  out << "# gnuplot -p " << script.filename().string() << "\n"
      << "set datafile separator ','\n"
      << "set logscale xy\n"
      << "set xlabel '|log eps~|'\n"
      << "set ylabel 'delta'\n"
      << "set key top right\n";
  out << "plot '" << csv.filename().string() << "' using (abs(log($3))):4 skip 1 with points pt 7 title 'sweep'";
  if (fit) {
    out << ", \\\n     " << format_double(fit->C_fit) << " * x**(-" << format_double(fit->eta_fit)
        << ") with lines title 'C |log eps~|^(-eta)'";
  }
  out << "\n";
}

// ---- disc integrals ------------------------------------------------------------

double integrate_disc(const GridSpec& grid, const Vec2& center, double radius, std::span<const LevelSet> sets,
                      const std::function<double(const Vec2&)>& f, int subdivisions) {
  if (!(radius > 0.0)) throw InvalidInputError("disc radius must be positive");
  std::vector<LevelSet> all{geometry::inside_disc(center, radius)};
  all.insert(all.end(), sets.begin(), sets.end());
  const double h = grid.h;
  const Vec2 lo = (center - grid.origin) / h - Vec2::Constant(radius / h + 1.0);
  const Vec2 hi = (center - grid.origin) / h + Vec2::Constant(radius / h + 1.0);
  double acc = 0.0;
  for (int j = static_cast<int>(std::floor(lo.y())); j <= static_cast<int>(std::ceil(hi.y())); ++j) {
    for (int i = static_cast<int>(std::floor(lo.x())); i <= static_cast<int>(std::ceil(hi.x())); ++i) {
      const Vec2 x = grid.node(i, j);
      const auto piece = geometry::cut_square(x - Vec2(0.5 * h, 0.5 * h), h, all, subdivisions);
      if (piece.area > 0.0) acc += piece.area * f(piece.centroid);
    }
  }
  return acc;
}

double clearance(const DiscreteSolution& solution, const Vec2& x) {
  const auto& g = *solution.grid;
  double d = g.domain.boundary_polyline().distance(x);
  if (!g.domain.contains(x)) return -d;
  if (g.inclusion) {
    const double di = g.inclusion->polyline().distance(x);
    if (g.inclusion->contains(x)) return -di;
    d = std::min(d, di);
  }
  return d;
}

double disc_hessian_l2(const DiscreteSolution& solution, const Vec2& center, double radius) {
  const auto sets = region_sets(solution);
  const double v = integrate_disc(solution.grid->spec, center, radius, sets,
                                  [&](const Vec2& x) { return solution.hessian(x).squaredNorm(); });
  if (!std::isfinite(v)) throw GeometryError("disc reaches nodes without values");
  return v;
}

double disc_w2(const DiscreteSolution& solution, const Vec2& center, double radius) {
  const auto sets = region_sets(solution);
  const double v = integrate_disc(solution.grid->spec, center, radius, sets, [&](const Vec2& x) {
    const double w = solution.value(x);
    return w * w;
  });
  if (!std::isfinite(v)) throw GeometryError("disc reaches nodes without values");
  return v;
}

// ---- three spheres ---------------------------------------------------------------

double theta0(double r1, double r2, double r3, double c0) {
  if (!(r1 > 0.0 && r1 < r2 && r2 < r3)) throw InvalidInputError("three spheres needs 0 < r1 < r2 < r3");
  if (!(c0 > 0.0)) throw InvalidInputError("c0 must be positive");
  return std::log(c0 * r3 / r2) / (2.0 * std::log(r3 / r1));
}

ThreeSpheresReport verify_three_spheres(const DiscreteSolution& solution, const Vec2& x, double r1, double r2,
                                        double r3, const Trials& trials) {
  ThreeSpheresReport out;
  out.theta0 = theta0(r1, r2, r3, trials.c0);
  const double rbar = clearance(solution, x);
  if (!(r3 < trials.c0 * rbar)) {
    throw GeometryError("three spheres: r3 = " + format_double(r3) + " is not below c0 times the clearance " +
                        format_double(rbar));
  }
  out.i1 = disc_hessian_l2(solution, x, r1);
  out.i2 = disc_hessian_l2(solution, x, r2);
  out.i3 = disc_hessian_l2(solution, x, r3);
  out.monotone = out.i1 <= out.i2 && out.i2 <= out.i3;
  out.vanishing = !(out.i1 > 0.0);
  if (out.vanishing) {
    out.ratio = out.q = kNaN;
    return out;
  }
  out.ratio = out.i2 / (std::pow(out.i1, out.theta0) * std::pow(out.i3, 1.0 - out.theta0));
  out.q = out.ratio * std::pow(r3 / r1, -trials.C);
  return out;
}

// ---- vanishing rates ------------------------------------------------------------------

ExponentFit fit_exponent(const std::vector<double>& radii, const std::vector<double>& integrals) {
  check_ladder(radii);
  if (integrals.size() != radii.size()) throw InvalidInputError("ladder and integrals differ in length");
  ExponentFit out;
  out.radii = radii;
  out.integrals = integrals;
  for (double v : integrals) out.vanishing = out.vanishing || !(v > 0.0);
  if (out.vanishing) {
    out.exponent = kNaN;
    return out;
  }
  std::vector<double> lr, li;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    lr.push_back(std::log(radii[k]));
    li.push_back(std::log(integrals[k]));
    if (k > 0) out.local.push_back((li[k] - li[k - 1]) / (lr[k] - lr[k - 1]));
  }
  const auto fit = stats::linear_fit(lr, li);
  out.exponent = fit.slope;
  out.r2 = fit.r2;
  out.finite = std::isfinite(out.exponent);
  return out;
}

ExponentFit verify_fvr_interior(const DiscreteSolution& solution, const Vec2& x, const std::vector<double>& radii,
                                const Trials&) {
  check_ladder(radii);
  const double rbar = clearance(solution, x);
  if (!(radii.back() < rbar)) {
    throw GeometryError("interior ladder: largest radius " + format_double(radii.back()) +
                        " exceeds the clearance " + format_double(rbar));
  }
  std::vector<double> values;
  for (double r : radii) values.push_back(disc_hessian_l2(solution, x, r));
  return fit_exponent(radii, values);
}

ExponentFit verify_fvr_boundary(const DiscreteSolution& solution, double fraction, const std::vector<double>& radii,
                                const Trials& trials) {
  check_ladder(radii);
  const auto& g = *solution.grid;
  if (!g.inclusion) throw InvalidInputError("boundary vanishing rate needs an inclusion");
  const auto& curve = g.inclusion->curve();
  const Vec2 x = curve.point(curve.theta_at_fraction(fraction));
  const double r0 = g.domain.constants().r0;
  const double r2 = trials.c_bar * r0;
  if (!(radii.back() < r2 + 1e-12 * r0)) {
    throw GeometryError("boundary ladder: largest radius " + format_double(radii.back()) + " exceeds c_bar r0 = " +
                        format_double(r2));
  }
  const double outer = 2.0 * r2;
  if (!(g.domain.boundary_polyline().distance(x) > outer)) {
    throw GeometryError("boundary ladder: disc of radius " + format_double(outer) + " leaves the domain");
  }
  std::vector<double> values;
  for (double r : radii) values.push_back(disc_w2(solution, x, r));
  auto fit = fit_exponent(radii, values);
  const double i2 = disc_w2(solution, x, r2);
  fit.B = i2 > 0.0 ? disc_w2(solution, x, outer) / i2 * std::pow(r0 / r2, trials.C) : kNaN;
  return fit;
}

// ---- propagation of smallness ----------------------------------------------------------

LpsReport verify_lps(const DiscreteSolution& solution, const CoupleField& couple, const std::vector<double>& rhos,
                     const Trials& trials, std::size_t max_centers) {
  check_ladder(rhos);
  const auto& g = *solution.grid;
  const double norm = normalization(g.domain, couple);
  if (!(norm > 0.0)) throw InvalidInputError("propagation of smallness needs nonzero data");
  const double r0 = g.domain.constants().r0;
  LpsReport out;
  for (double rho : rhos) {
    LpsLevel level;
    level.rho = rho;
    const auto eroded = geometry::erode_domain(g.domain, g.spec, trials.s * rho, g.inclusion);
    std::vector<Vec2> centers;
    for (int j = 0; j < g.spec.ny; ++j) {
      for (int i = 0; i < g.spec.nx; ++i) {
        if (eroded.mask.contains_node(i, j)) centers.push_back(g.spec.node(i, j));
      }
    }
    if (eroded.empty || centers.empty()) {
      level.skipped = true;
      level.note = "eroded region empty";
      out.levels.push_back(level);
      continue;
    }
    const std::size_t stride = (centers.size() + max_centers - 1) / max_centers;
    level.m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centers.size(); k += stride) {
      level.m = std::min(level.m, disc_hessian_l2(solution, centers[k], rho) / (norm * norm));
      ++level.centers;
    }
    out.levels.push_back(level);
  }
  std::vector<double> used_rho, log_m;
  out.positive = true;
  for (const auto& l : out.levels) {
    if (l.skipped) continue;
    out.positive = out.positive && l.m > 0.0;
    if (l.m > 0.0) {
      used_rho.push_back(l.rho);
      log_m.push_back(std::log(l.m));
    }
  }
  if (used_rho.empty()) out.positive = false;
  if (used_rho.size() >= 2) {
    out.fit.r2 = -std::numeric_limits<double>::infinity();
    for (int b = 0; b <= 70; ++b) {
      const double B = 0.5 + 0.05 * b;
      std::vector<double> x;
      for (double rho : used_rho) x.push_back(std::pow(r0 / rho, B));
      const auto fit = stats::linear_fit(x, log_m);
      if (std::isfinite(fit.r2) && fit.r2 > out.fit.r2) {
        out.fit = fit;
        out.B_trial = B;
      }
    }
    out.finite_fit = std::isfinite(out.fit.slope) && std::isfinite(out.fit.intercept);
  }
  return out;
}

// ---- continuation ------------------------------------------------------------------------------

CauchyReport verify_cauchy_decay(const std::vector<StabilityRecord>& records) {
  CauchyReport out;
  std::vector<double> L, delta;
  for (const auto& r : records) {
    const double l = r.L1 + r.L2;
    if (r.failed || !(l > 0.0) || !(r.epsilon_norm > 0.0 && r.epsilon_norm < 1.0)) continue;
    out.log_L.push_back(std::log(l));
    out.log_log_eps.push_back(std::log(std::abs(std::log(r.epsilon_norm))));
    L.push_back(l);
    delta.push_back(r.delta);
  }
  out.used = static_cast<int>(L.size());
  if (out.used < 3) throw UnderdeterminedError("continuation report needs at least 3 usable records");
  out.spearman = stats::spearman(out.log_L, out.log_log_eps);
  out.spearman_delta = stats::spearman(L, delta);
  return out;
}

}  // namespace platelab::stability_lab
