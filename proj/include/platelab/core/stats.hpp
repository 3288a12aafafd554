#pragma once

#include <span>
#include <vector>

namespace platelab::stats {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_stderr = 0.0;
  double residual_rms = 0.0;
  int n = 0;
  // Two-sided 95% confidence half-width of the slope (Student t, n-2 dof).
  double slope_ci95() const;
};

// Ordinary least squares y = intercept + slope * x. Needs at least 2 points.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

double spearman(std::span<const double> x, std::span<const double> y);

std::vector<double> ranks(std::span<const double> v);

}  // namespace platelab::stats
