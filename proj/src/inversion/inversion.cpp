#include "platelab/inversion/inversion.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "json.hpp"
#include "platelab/core/errors.hpp"
#include "platelab/geometry/distances.hpp"

namespace platelab::inversion {

std::size_t parameter_count(int k_modes) { return static_cast<std::size_t>(3 + 2 * k_modes); }

Box default_bounds(const PlanarDomain& domain, int k_modes) {
  if (k_modes < 0) throw InvalidInputError("k_modes must be nonnegative");
  const auto& curve = domain.boundary();
  const double r0 = domain.constants().r0;
  const double inner = curve.min_radius();
  const double reach = std::max(inner - r0 - 0.1 * r0, 0.0);  // leaves room for a 0.1 r0 inclusion
  Box box;
  const Vec2 c = curve.center();
  box.lower = {c.x() - reach, c.y() - reach, 0.1 * r0};
  box.upper = {c.x() + reach, c.y() + reach, std::max(inner - r0, 0.1 * r0)};
  for (int k = 0; k < k_modes; ++k) {
    const double a = 0.25 * box.upper[2];
    box.lower.insert(box.lower.end(), {-a, -a});
    box.upper.insert(box.upper.end(), {a, a});
  }
  return box;
}

double data_scale(const TraceData& t) {
  double sw = 0.0, sd = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    sw += t.w[k] * t.w[k];
    sd += t.dn[k] * t.dn[k];
  }
  return std::sqrt(sw * t.step) + t.r0 * std::sqrt(sd * t.step);
}

TraceData synthesize(const PlanarDomain& domain, const IsotropicPlate& plate, const CoupleField& couple,
                     const StarInclusion& inclusion, double resolution, std::size_t samples,
                     const plate_solver::GridOptions& grid, const plate_solver::SolverOptions& solver) {
  auto options = grid;
  options.resolution = resolution;
  auto g = std::make_shared<plate_solver::PlateGrid>(plate_solver::build_grid(domain, inclusion, options));
  const auto s = plate_solver::solve_dirichlet_form(g, plate, couple, solver);
  return boundary_data::extract_traces(s, domain, samples);
}

MisfitValue misfit(const std::vector<double>& params, const InverseSetup& setup) {
  if (params.size() != parameter_count(setup.k_modes)) throw InvalidInputError("misfit: wrong parameter count");
  const double scale = data_scale(setup.observed);
  const double penalty = 1e6 * (scale > 0.0 ? scale : 1.0);
  MisfitValue out;
  try {
    const auto inc = StarInclusion::from_parameters(params, setup.domain.constants().distance_step);
    // Compactness deficit, for a penalty that still points inward.
    double clearance = std::numeric_limits<double>::infinity();
    for (const auto& p : inc.polyline().points()) {
      const double d = setup.domain.boundary_polyline().distance(p);
      clearance = std::min(clearance, setup.domain.contains(p) ? d : -d);
    }
    const double deficit = setup.domain.constants().r0 - clearance;
    if (deficit > 0.0) {
      out.value = penalty * (1.0 + deficit);
      out.penalized = true;
      out.reason = "compactness";
      return out;
    }
    const auto predicted = synthesize(setup.domain, setup.plate, setup.couple, inc, setup.resolution,
                                      setup.observed.size(), setup.grid, setup.solver);
    out.value = boundary_data::gauge_min_misfit(setup.observed, predicted).epsilon;
    if (!std::isfinite(out.value)) throw SolverError("non-finite misfit");
  } catch (const Error& e) {
    out.value = penalty;
    out.penalized = true;
    out.reason = e.what();
  }
  return out;
}

ReconstructionResult reconstruct(const InverseSetup& setup, const std::vector<double>& init,
                                 const std::optional<StarInclusion>& truth) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = parameter_count(setup.k_modes);
  if (init.size() != n) throw InvalidInputError("reconstruct: initial parameters have the wrong length");
  if (setup.bounds.lower.size() != n || setup.bounds.upper.size() != n) {
    throw InvalidInputError("reconstruct: bounds have the wrong length");
  }
  if (!setup.bounds.contains(init)) throw InvalidInputError("reconstruct: initial parameters outside bounds");
  if (setup.budget < 1) throw InvalidInputError("reconstruct: budget must be positive");

  ReconstructionResult result;
  result.best = init;
  result.misfit = std::numeric_limits<double>::infinity();
  const double floor = setup.floor_relative * data_scale(setup.observed);
  int restart = 0;
  auto objective = [&](const std::vector<double>& x) {
    if (result.evaluations >= setup.budget) return std::numeric_limits<double>::infinity();
    const auto m = misfit(x, setup);
    ++result.evaluations;
    result.history.push_back({restart, x, m.value, m.penalized});
    if (m.value < result.misfit) {
      result.misfit = m.value;
      result.best = x;
    }
    return m.value;
  };

  const double a0 = std::max(init[2], 0.1);
  std::vector<double> steps(n);
  steps[0] = steps[1] = 0.1 * setup.domain.constants().r0;
  steps[2] = 0.1 * a0;
  for (std::size_t i = 3; i < n; ++i) steps[i] = 0.05 * a0;

  NelderMeadOptions opt;
  opt.f_floor = floor;
  opt.x_tolerance = 1e-4 * setup.domain.constants().r0;
  opt.f_tolerance = 1e-6 * data_scale(setup.observed);

  auto run = [&](const NelderMeadResult& r) {
    if (r.hit_floor || r.converged) result.converged = true;
    return r.hit_floor;
  };
  opt.max_evaluations = setup.budget;
  if (!run(nelder_mead(objective, init, steps, opt, setup.bounds))) {
    std::mt19937_64 rng(setup.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (restart = 1; restart <= setup.restarts && result.evaluations < setup.budget; ++restart) {
      // Random simplex around the best point so far.
      std::vector<std::vector<double>> simplex{result.best};
      for (std::size_t i = 0; i < n; ++i) {
        auto v = result.best;
        for (std::size_t j = 0; j < n; ++j) v[j] += 0.25 * steps[j] * u(rng);
        v[i] += steps[i] * (u(rng) >= 0.0 ? 1.0 : -1.0);
        simplex.push_back(setup.bounds.project(v));
      }
      opt.max_evaluations = setup.budget - result.evaluations;
      if (run(nelder_mead_simplex(objective, simplex, opt, setup.bounds))) break;
    }
  }
  if (truth) {
    result.hausdorff_to_truth =
        geometry::hausdorff_distance(StarInclusion::from_parameters(result.best, truth->sampling_step()), *truth).value;
  }
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::string result_json(const ReconstructionResult& r, bool with_history, bool with_timing) {
  nlohmann::ordered_json j;
  j["best"] = r.best;
  j["misfit"] = r.misfit;
  j["hausdorff_to_truth"] = r.hausdorff_to_truth ? nlohmann::ordered_json(*r.hausdorff_to_truth) : nlohmann::ordered_json();
  j["evaluations"] = r.evaluations;
  j["converged"] = r.converged;
  if (with_timing) j["wall_time"] = r.wall_time;
  if (with_history) {
    auto& h = j["history"] = nlohmann::ordered_json::array();
    for (const auto& e : r.history) h.push_back({{"restart", e.restart}, {"x", e.x}, {"f", e.f}, {"penalized", e.penalized}});
  }
  return j.dump(2);
}

}  // namespace platelab::inversion
