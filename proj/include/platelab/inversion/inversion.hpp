#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "platelab/boundary_data/traces.hpp"
#include "platelab/core/nelder_mead.hpp"

namespace platelab::inversion {

using boundary_data::TraceData;
using geometry::PlanarDomain;
using geometry::Vec2;
using geometry::StarInclusion;
using material::IsotropicPlate;
using plate_solver::CoupleField;

struct InverseSetup {
  PlanarDomain domain;
  IsotropicPlate plate;
  CoupleField couple;
  TraceData observed;
  int k_modes = 2;
  Box bounds{};           // on (cx, cy, a0, a1, b1, ...)
  double resolution = 64.0;
  int budget = 500;        // forward solves, shared by all restarts
  int restarts = 3;
  std::uint64_t seed = 0;
  double floor_relative = 1e-9;  // stop once misfit <= floor_relative * data scale
  plate_solver::GridOptions grid{};
  plate_solver::SolverOptions solver{};
};

// Box around the domain: centre within the inscribed region, a0 in
// [0.1 r0, max radius - r0], |a_k|, |b_k| <= 0.25 a0 upper bound.
Box default_bounds(const PlanarDomain& domain, int k_modes);
std::size_t parameter_count(int k_modes);

// ||w||_L2(Sigma) + r0 ||dn w||_L2(Sigma) of the observed traces.
double data_scale(const TraceData& t);

struct MisfitValue {
  double value = 0.0;
  bool penalized = false;
  std::string reason;
};

// Forward solve for the candidate, traces, gauge misfit against the data.
// Inadmissible candidates get a finite penalty 1e6 * data scale (plus the
// compactness deficit) and are flagged.
MisfitValue misfit(const std::vector<double>& params, const InverseSetup& setup);

// Forward solve for `inclusion` and traces on the layout of `domain`.
TraceData synthesize(const PlanarDomain& domain, const IsotropicPlate& plate, const CoupleField& couple,
                     const StarInclusion& inclusion, double resolution, std::size_t samples = 256,
                     const plate_solver::GridOptions& grid = {}, const plate_solver::SolverOptions& solver = {});

struct HistoryEntry {
  int restart = 0;  // 0 for the initial run
  std::vector<double> x;
  double f = 0.0;
  bool penalized = false;
};

struct ReconstructionResult {
  std::vector<double> best;
  double misfit = 0.0;
  int evaluations = 0;
  bool converged = false;  // a simplex run met its tolerances or the floor within budget
  std::vector<HistoryEntry> history;
  std::optional<double> hausdorff_to_truth;
  double wall_time = 0.0;
};

ReconstructionResult reconstruct(const InverseSetup& setup, const std::vector<double>& init,
                                 const std::optional<StarInclusion>& truth = std::nullopt);

// JSON record (best params, misfit, d_H, evaluations, wall time, history).
// Without timing the record is reproducible byte for byte.
std::string result_json(const ReconstructionResult& r, bool with_history = true, bool with_timing = true);

}  // namespace platelab::inversion
