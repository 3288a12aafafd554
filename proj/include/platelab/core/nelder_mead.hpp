#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace platelab {

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> project(std::vector<double> x) const;
  bool contains(const std::vector<double>& x) const;
};

struct NelderMeadOptions {
  int max_evaluations = 500;
  double f_tolerance = 1e-12;  // stop when simplex f-range is below this
  double x_tolerance = 1e-8;   // and simplex diameter is below this
  double f_floor = -std::numeric_limits<double>::infinity();  // stop as soon as best <= floor
};

struct Evaluation {
  std::vector<double> x;
  double f = 0.0;
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
  bool hit_floor = false;
  std::vector<Evaluation> history;
};

using Objective = std::function<double(const std::vector<double>&)>;

// Nelder-Mead on an axis-aligned simplex around x0 with per-coordinate steps.
// Trial points are projected onto `box` when given.
NelderMeadResult nelder_mead(const Objective& f, const std::vector<double>& x0,
                             const std::vector<double>& steps, const NelderMeadOptions& options,
                             const std::optional<Box>& box = std::nullopt);

// Same, but the initial simplex is supplied explicitly (n+1 vertices).
NelderMeadResult nelder_mead_simplex(const Objective& f, std::vector<std::vector<double>> simplex,
                                     const NelderMeadOptions& options,
                                     const std::optional<Box>& box = std::nullopt);

}  // namespace platelab
