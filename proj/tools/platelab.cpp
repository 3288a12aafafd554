#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "platelab/cli/config.hpp"
#include "platelab/core/errors.hpp"
#include "platelab/inversion/inversion.hpp"

using namespace platelab;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0, kConfig = 1, kSolver = 2, kNotConverged = 3;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

// One experiment directory: config copy, input manifest, outputs, meta.json.
class Experiment {
 public:
  Experiment(const cli::ExperimentConfig& c, const std::string& command, const std::string& out)
      : dir_(out.empty() ? c.output_dir : fs::path(out)), command_(command), started_(utc_now()),
        t0_(std::chrono::steady_clock::now()) {
    fs::create_directories(dir_);
    fs::copy_file(c.path, dir_ / "config.txt", fs::copy_options::overwrite_existing);
    write_text(dir_ / "manifest.json", cli::manifest_json(c.inputs()));
  }
  const fs::path& dir() const { return dir_; }
  json& meta() { return meta_; }
  void finish(int code) {
    json m;
    m["command"] = command_;
    m["started"] = started_;
    m["finished"] = utc_now();
    m["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    m["exit_code"] = code;
    for (auto& [k, v] : meta_.items()) m[k] = v;
    write_text(dir_ / "meta.json", m.dump(2));
  }

 private:
  fs::path dir_;
  std::string command_;
  std::string started_;
  std::chrono::steady_clock::time_point t0_;
  json meta_ = json::object();
};

void require_admissible(const geometry::PlanarDomain& domain, const std::optional<geometry::StarInclusion>& inc) {
  const auto report = geometry::check_apriori(domain, inc);
  if (!report.passed()) throw GeometryError("a-priori check failed: " + report.failures());
}

void require_valid_couple(const cli::ExperimentConfig& c) {
  const auto v = plate_solver::validate_couple(c.couple, c.geometry.domain);
  if (!v.passed()) {
    throw InvalidInputError("couple field rejected: support_in_sigma=" + std::to_string(v.support_in_sigma) +
                            " compatible=" + std::to_string(v.compatible) + " nontrivial=" +
                            std::to_string(v.nontrivial) + " frequency_ok=" + std::to_string(v.frequency_ok));
  }
}

std::shared_ptr<plate_solver::PlateGrid> make_grid(const cli::ExperimentConfig& c,
                                                    const std::optional<geometry::StarInclusion>& inc,
                                                    double resolution) {
  auto o = c.grid;
  o.resolution = resolution;
  return std::make_shared<plate_solver::PlateGrid>(plate_solver::build_grid(c.geometry.domain, inc, o));
}

json solve_info_json(const plate_solver::SolveInfo& i) {
  return {{"method", i.method},
          {"iterations", i.iterations},
          {"tolerance", i.tolerance},
          {"relative_residual", i.relative_residual},
          {"backward_error", i.backward_error},
          {"compatibility", i.compatibility},
          {"gauge_fixed", i.gauge_fixed},
          {"constraint_iterations", i.constraint_iterations},
          {"constraint_violation", i.constraint_violation}};
}

int cmd_forward(const cli::ExperimentConfig& c, Experiment& ex) {
  const auto& domain = c.geometry.domain;
  const auto& inc = c.geometry.inclusion;
  require_admissible(domain, inc);
  require_valid_couple(c);
  const auto grid = make_grid(c, inc, c.grid.resolution);
  json report;
  plate_solver::DiscreteSolution sol;
  if (inc) {
    const auto r = plate_solver::solve_rigid_form(grid, c.plate, c.couple, c.solver);
    sol = r.solution;
    report["equilibrium"] = r.equilibrium;
    report["energy_scale"] = r.energy_scale;
    report["equilibrium_ok"] = r.equilibrium_ok();
    report["consistency"] = r.consistency;
    report["gauge"] = r.gauge.c;
  } else {
    sol = plate_solver::solve_dirichlet_form(grid, c.plate, c.couple, c.solver);
  }
  report["resolution"] = c.grid.resolution;
  report["unknowns"] = grid->unknowns;
  report["solve"] = solve_info_json(sol.info);
  report["stored_energy"] = sol.stored_energy;
  report["boundary_work"] = sol.boundary_work;

  std::vector<plate_solver::EnergyEstimate> levels{plate_solver::verify_energy_estimate(sol, c.couple)};
  for (double res : c.energy_levels) {
    if (res == c.grid.resolution) continue;
    const auto g = make_grid(c, inc, res);
    const auto s = plate_solver::solve_dirichlet_form(g, c.plate, c.couple, c.solver);
    levels.push_back(plate_solver::verify_energy_estimate(s, c.couple));
  }
  std::sort(levels.begin(), levels.end(), [](const auto& a, const auto& b) { return a.resolution < b.resolution; });
  const auto est = plate_solver::verify_energy_estimate(levels);
  auto& e = report["energy_estimate"];
  for (const auto& l : est.levels) {
    e["levels"].push_back({{"resolution", l.resolution}, {"h2_norm", l.h2_norm}, {"surrogate", l.surrogate}, {"ratio", l.ratio}});
  }
  e["bound"] = est.bound;
  e["bounded"] = est.bounded;
  e["stable"] = est.stable;

  plate_solver::write_solution(sol, ex.dir() / "solution.csv");
  auto traces = boundary_data::extract_traces(sol, domain, c.trace_samples);
  if (c.trace_noise > 0.0) traces = boundary_data::add_noise(traces, c.trace_noise, c.seed);
  boundary_data::write_traces(traces, ex.dir() / "traces.csv");
  write_text(ex.dir() / "energy.json", report.dump(2));
  std::cout << "forward: " << grid->unknowns << " unknowns, stored energy " << format_double(sol.stored_energy)
            << ", outputs in " << ex.dir().string() << "\n";
  return kOk;
}

int cmd_invert(const cli::ExperimentConfig& c, Experiment& ex) {
  const auto& domain = c.geometry.domain;
  const auto& s = c.invert;
  require_valid_couple(c);
  std::optional<geometry::StarInclusion> truth;
  const double step = domain.constants().distance_step;
  if (s.truth) {
    truth = geometry::StarInclusion::from_parameters(*s.truth, step);
  } else {
    truth = c.geometry.inclusion;
  }
  inversion::InverseSetup setup{domain, c.plate, c.couple, {}};
  setup.k_modes = s.k_modes;
  setup.bounds = inversion::default_bounds(domain, s.k_modes);
  setup.resolution = c.grid.resolution;
  setup.budget = s.budget;
  setup.restarts = s.restarts;
  setup.seed = s.seed;
  setup.grid = c.grid;
  setup.solver = c.solver;
  if (s.data) {
    setup.observed = boundary_data::read_traces(*s.data, domain);
  } else {
    if (!truth) throw ConfigError("invert needs invert.data, invert.truth or an inclusion in the geometry file");
    require_admissible(domain, truth);
    setup.observed = inversion::synthesize(domain, c.plate, c.couple, *truth,
                                           s.data_resolution_factor * c.grid.resolution, c.trace_samples, c.grid,
                                           c.solver);
    if (c.trace_noise > 0.0) setup.observed = boundary_data::add_noise(setup.observed, c.trace_noise, c.seed);
    boundary_data::write_traces(setup.observed, ex.dir() / "data_traces.csv");
  }
  std::vector<double> init;
  if (s.init) {
    init = *s.init;
  } else {
    init.assign(static_cast<std::size_t>(3 + 2 * s.k_modes), 0.0);
    init[0] = domain.boundary().center().x();
    init[1] = domain.boundary().center().y();
    init[2] = 0.5 * (setup.bounds.lower[2] + setup.bounds.upper[2]);
  }
  if (!setup.bounds.contains(init)) throw ConfigError("invert.init lies outside the search bounds");
  const auto r = inversion::reconstruct(setup, init, truth);
  write_text(ex.dir() / "reconstruction.json", inversion::result_json(r, true, false));
  ex.meta()["reconstruction_wall_time"] = r.wall_time;
  std::cout << "invert: misfit " << format_double(r.misfit) << " after " << r.evaluations << " solves";
  if (r.hausdorff_to_truth) std::cout << ", d_H to truth " << format_double(*r.hausdorff_to_truth);
  std::cout << (r.converged ? "" : " (not converged)") << "\n";
  return r.converged ? kOk : kNotConverged;
}

stability_lab::SweepSetup sweep_setup(const cli::ExperimentConfig& c, int jobs) {
  stability_lab::SweepSetup s{c.geometry.domain, c.plate, c.couple};
  s.resolution = c.grid.resolution;
  s.data_resolution = c.sweep.data_resolution_factor * c.grid.resolution;
  s.trace_samples = c.trace_samples;
  s.noise = c.sweep.noise;
  s.seed = c.seed;
  s.jobs = jobs;
  s.grid = c.grid;
  s.solver = c.solver;
  return s;
}

std::vector<stability_lab::StabilityRecord> run_sweep(const cli::ExperimentConfig& c, int jobs) {
  if (!c.geometry.inclusion) throw ConfigError("sweep needs an inclusion in the geometry file");
  require_admissible(c.geometry.domain, c.geometry.inclusion);
  require_valid_couple(c);
  const auto& base = *c.geometry.inclusion;
  const auto family = c.sweep.family == "dilation"
                          ? stability_lab::dilation_family(base, c.sweep.sizes)
                          : stability_lab::translation_family(base, c.sweep.sizes, c.sweep.direction);
  auto records = stability_lab::sweep(base, family, sweep_setup(c, jobs));
  int failed = 0;
  for (const auto& r : records) {
    if (r.failed) {
      ++failed;
      std::cerr << "warning: pair " << r.pair_id << " failed: " << r.message << "\n";
    }
  }
  if (!records.empty() && failed == static_cast<int>(records.size())) throw SolverError("every sweep pair failed");
  return records;
}

int cmd_sweep(const cli::ExperimentConfig& c, Experiment& ex, int jobs) {
  const auto records = run_sweep(c, jobs);
  stability_lab::write_sweep_csv(records, ex.dir() / "sweep.csv");
  std::optional<stability_lab::LogLawFit> fit;
  try {
    fit = stability_lab::fit_log_law(records);
    write_text(ex.dir() / "fit.json", stability_lab::fit_json(*fit));
    for (const auto& w : fit->warnings) std::cerr << "warning: " << w << "\n";
  } catch (const UnderdeterminedError& e) {
    std::cerr << "warning: no log-law fit: " << e.what() << "\n";
  }
  stability_lab::write_plot_script(ex.dir() / "sweep.gp", ex.dir() / "sweep.csv", fit);
  std::cout << "sweep: " << records.size() << " pairs";
  if (fit) std::cout << ", eta_fit " << format_double(fit->eta_fit) << ", R^2 " << format_double(fit->r2);
  std::cout << ", outputs in " << ex.dir().string() << "\n";
  return kOk;
}

int cmd_fit(const std::vector<std::string>& paths, const std::string& out) {
  std::vector<stability_lab::StabilityRecord> records;
  for (const auto& p : paths) {
    const auto r = stability_lab::read_sweep_csv(p);
    records.insert(records.end(), r.begin(), r.end());
  }
  const auto fit = stability_lab::fit_log_law(records);
  for (const auto& w : fit.warnings) std::cerr << "warning: " << w << "\n";
  const auto text = stability_lab::fit_json(fit);
  if (out.empty()) {
    std::cout << text << "\n";
  } else {
    write_text(out, text);
    stability_lab::write_plot_script(fs::path(out).replace_extension(".gp"), fs::path(paths.front()), fit);
  }
  return kOk;
}

geometry::Vec2 default_point(const plate_solver::DiscreteSolution& s) {
  const auto& g = *s.grid;
  geometry::Vec2 best = g.domain.boundary().center();
  double clear = -1.0;
  for (int j = 0; j < g.spec.ny; j += 2) {
    for (int i = 0; i < g.spec.nx; i += 2) {
      if (g.at(i, j) != plate_solver::NodeKind::free) continue;
      const auto x = g.spec.node(i, j);
      const double d = stability_lab::clearance(s, x);
      if (d > clear) {
        clear = d;
        best = x;
      }
    }
  }
  return best;
}

json fit_report(const stability_lab::ExponentFit& f) {
  return {{"radii", f.radii}, {"integrals", f.integrals}, {"local", f.local}, {"exponent", f.exponent},
          {"r2", f.r2},       {"finite", f.finite},       {"vanishing", f.vanishing}};
}

int cmd_verify(const cli::ExperimentConfig& c, Experiment& ex, const std::string& which, int jobs,
               const std::string& sweep_csv) {
  const auto& v = c.verify;
  json report;
  report["which"] = which;
  if (which == "cauchy") {
    const auto records = sweep_csv.empty() ? run_sweep(c, jobs) : stability_lab::read_sweep_csv(sweep_csv);
    if (sweep_csv.empty()) stability_lab::write_sweep_csv(records, ex.dir() / "sweep.csv");
    const auto r = stability_lab::verify_cauchy_decay(records);
    report["log_L"] = r.log_L;
    report["log_log_eps"] = r.log_log_eps;
    report["spearman"] = r.spearman;
    report["spearman_delta"] = r.spearman_delta;
    report["used"] = r.used;
  } else {
    if (which == "3sph") {
      const auto& r = v.radii;
      stability_lab::theta0(r[0], r[1], r[2], v.trials.c0);  // validates before solving
    }
    require_admissible(c.geometry.domain, c.geometry.inclusion);
    require_valid_couple(c);
    const auto grid = make_grid(c, c.geometry.inclusion, c.grid.resolution);
    const auto sol = plate_solver::solve_dirichlet_form(grid, c.plate, c.couple, c.solver);
    const auto x = v.point ? *v.point : default_point(sol);
    if (which == "3sph") {
      const auto r = stability_lab::verify_three_spheres(sol, x, v.radii[0], v.radii[1], v.radii[2], v.trials);
      report["point"] = {x.x(), x.y()};
      report["theta0"] = r.theta0;
      report["integrals"] = {r.i1, r.i2, r.i3};
      report["monotone"] = r.monotone;
      report["vanishing"] = r.vanishing;
      report["ratio"] = r.ratio;
      report["q"] = r.q;
    } else if (which == "fvr-int") {
      report["point"] = {x.x(), x.y()};
      report["fit"] = fit_report(stability_lab::verify_fvr_interior(sol, x, v.ladder, v.trials));
    } else if (which == "fvr-bnd") {
      if (!c.geometry.inclusion) throw ConfigError("fvr-bnd needs an inclusion in the geometry file");
      for (double f : v.fractions) {
        const auto r = stability_lab::verify_fvr_boundary(sol, f, v.boundary_ladder, v.trials);
        auto j = fit_report(r);
        j["fraction"] = f;
        j["B"] = r.B;
        report["points"].push_back(j);
      }
    } else {
      const auto r = stability_lab::verify_lps(sol, c.couple, v.rhos, v.trials, v.max_centers);
      for (const auto& l : r.levels) {
        report["levels"].push_back(
            {{"rho", l.rho}, {"m", l.m}, {"centers", l.centers}, {"skipped", l.skipped}, {"note", l.note}});
      }
      report["positive"] = r.positive;
      report["B_trial"] = r.B_trial;
      report["fit"] = {{"slope", r.fit.slope}, {"intercept", r.fit.intercept}, {"r2", r.fit.r2}};
      report["finite_fit"] = r.finite_fit;
    }
  }
  const auto name = "verify_" + which + ".json";
  write_text(ex.dir() / name, report.dump(2));
  std::cout << "verify " << which << ": " << (ex.dir() / name).string() << "\n";
  return kOk;
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const SolverError*>(&e)) return kSolver;
  if (dynamic_cast<const Error*>(&e)) return kConfig;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kConfig;
  return kSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"platelab: forward solves, inclusion reconstruction and stability experiments for clamped "
               "rigid inclusions in thin plates"};
  app.footer("\n" + cli::config_help() +
             "\nExit codes: 0 ok, 1 config or validation error, 2 solver failure, 3 not converged within budget.\n"
             "Every run writes config.txt, manifest.json (SHA-256 of inputs) and meta.json (timestamps) next to "
             "its outputs.");
  app.require_subcommand(1);
  int jobs = 1;
  app.add_option("--jobs,-j", jobs, "concurrent sweep pairs")->envname("PLATELAB_JOBS")->check(CLI::PositiveNumber);

  std::string config, out, sweep_csv, which;
  std::vector<std::string> fit_paths;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("config", config, "experiment config file")->required();
    sub->add_option("--out,-o", out, "experiment directory (overrides output.dir)");
  };
  auto* forward = app.add_subcommand("forward", "solve the forward problem; writes solution.csv, traces.csv, energy.json");
  add_config(forward);
  auto* invert = app.add_subcommand("invert", "reconstruct the inclusion; writes reconstruction.json");
  add_config(invert);
  auto* sweep = app.add_subcommand("sweep", "perturbation sweep; writes sweep.csv, fit.json, sweep.gp");
  add_config(sweep);
  auto* fit = app.add_subcommand("fit", "fit the log law to sweep CSVs");
  fit->add_option("csv", fit_paths, "sweep CSV files")->required()->check(CLI::ExistingFile);
  fit->add_option("--out,-o", out, "fit JSON path (default: stdout)");
  auto* verify = app.add_subcommand("verify", "evaluate a unique-continuation quantity; writes verify_<which>.json");
  verify->add_option("which", which, "3sph | fvr-int | fvr-bnd | lps | cauchy")
      ->required()
      ->check(CLI::IsMember({"3sph", "fvr-int", "fvr-bnd", "lps", "cauchy"}));
  add_config(verify);
  verify->add_option("--sweep", sweep_csv, "reuse a sweep CSV for cauchy")->check(CLI::ExistingFile);
  auto* check = app.add_subcommand("check-config", "validate a config without running");
  check->add_option("config", config, "experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*fit) return cmd_fit(fit_paths, out);
    const auto c = cli::load_config(config);
    if (*check) {
      require_valid_couple(c);
      const auto report = geometry::check_apriori(c.geometry.domain, c.geometry.inclusion);
      if (!report.passed()) throw GeometryError("a-priori check failed: " + report.failures());
      std::cout << "config ok: " << c.document.keys().size() << " keys\n";
      return kOk;
    }
    const std::string command = app.get_subcommands().front()->get_name() + (which.empty() ? "" : " " + which);
    Experiment ex(c, command, out);
    int code = kSolver;
    try {
      if (*forward) code = cmd_forward(c, ex);
      else if (*invert) code = cmd_invert(c, ex);
      else if (*sweep) code = cmd_sweep(c, ex, jobs);
      else code = cmd_verify(c, ex, which, jobs, sweep_csv);
    } catch (const std::exception& e) {
      code = exit_code(e);
      ex.meta()["error"] = e.what();
      ex.finish(code);
      throw;
    }
    ex.finish(code);
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  }
}
