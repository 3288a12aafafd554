#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "platelab/plate_solver/solver.hpp"

namespace platelab::boundary_data {

using geometry::ArcRange;
using geometry::PlanarDomain;
using geometry::Vec2;
using plate_solver::Affine;

// w and dw/dn sampled at the midpoints of n equal arc-length pieces of Sigma.
struct TraceData {
  ArcRange sigma;
  std::vector<double> fractions;  // boundary arc-length fractions of the samples
  std::vector<Vec2> points;
  std::vector<Vec2> normals;
  std::vector<double> w;
  std::vector<double> dn;
  double step = 0.0;  // arc length per sample
  double r0 = 1.0;
  double noise_level = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return w.size(); }
};

// Sample positions only (values zero).
TraceData trace_layout(const PlanarDomain& domain, std::size_t n_samples = 256);

// w by bicubic interpolation of the node values; dw/dn by the fourth-order
// one-sided difference along the inward normal with step h.
TraceData extract_traces(const plate_solver::DiscreteSolution& solution, const PlanarDomain& domain,
                         std::size_t n_samples = 256);

// Traces of an analytic field.
TraceData analytic_traces(const PlanarDomain& domain, const std::function<double(const Vec2&)>& w,
                          const std::function<Vec2(const Vec2&)>& grad, std::size_t n_samples = 256);

// t plus the traces of an affine function.
TraceData add_affine(const TraceData& t, const Affine& g);

// ||a - g||_L2(Sigma) + r0 ||dn a - dn g||_L2(Sigma) with a = w1 - w2 (midpoint rule).
double gauge_objective(const TraceData& t1, const TraceData& t2, const Affine& g);

struct GaugeMisfit {
  double epsilon = 0.0;
  Affine g;
  double surrogate_epsilon = 0.0;  // objective at the least-squares minimizer
  int evaluations = 0;
};

// min over affine g of gauge_objective. Throws UnderdeterminedError below
// 4 samples, InvalidInputError when the samplings differ.
GaugeMisfit gauge_min_misfit(const TraceData& t1, const TraceData& t2);

// Gaussian noise with standard deviation level * RMS, per component.
TraceData add_noise(const TraceData& t, double level, std::uint64_t seed);

// CSV (arc_length_fraction, w, dn_w) plus a JSON sidecar `<path>.json`.
void write_traces(const TraceData& t, const std::filesystem::path& path);
TraceData read_traces(const std::filesystem::path& path, const PlanarDomain& domain);

}  // namespace platelab::boundary_data
