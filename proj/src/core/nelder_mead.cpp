#include "platelab/core/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "platelab/core/errors.hpp"

namespace platelab {

std::vector<double> Box::project(std::vector<double> x) const {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
  return x;
}

bool Box::contains(const std::vector<double>& x) const {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  }
  return true;
}

NelderMeadResult nelder_mead(const Objective& f, const std::vector<double>& x0,
                             const std::vector<double>& steps, const NelderMeadOptions& options,
                             const std::optional<Box>& box) {
  if (steps.size() != x0.size()) throw InvalidInputError("nelder_mead: step/dimension mismatch");
  std::vector<std::vector<double>> simplex{x0};
  for (std::size_t i = 0; i < x0.size(); ++i) {
    auto v = x0;
    v[i] += steps[i];
    if (box && v[i] > box->upper[i]) v[i] = x0[i] - steps[i];
    simplex.push_back(v);
  }
  return nelder_mead_simplex(f, std::move(simplex), options, box);
}

NelderMeadResult nelder_mead_simplex(const Objective& f, std::vector<std::vector<double>> simplex,
                                     const NelderMeadOptions& options, const std::optional<Box>& box) {
  const std::size_t n = simplex.empty() ? 0 : simplex.front().size();
  if (n == 0 || simplex.size() != n + 1) throw InvalidInputError("nelder_mead: simplex needs n+1 vertices");
  NelderMeadResult result;
  auto eval = [&](std::vector<double> x) {
    if (box) x = box->project(std::move(x));
    const double v = f(x);
    ++result.evaluations;
    result.history.push_back({x, v});
    if (v < result.f) {
      result.f = v;
      result.x = x;
    }
    return std::make_pair(x, v);
  };
  auto budget_left = [&] { return result.evaluations < options.max_evaluations; };
  auto at_floor = [&] { return result.f <= options.f_floor; };

  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    if (!budget_left() || at_floor()) {
      result.hit_floor = at_floor();
      return result;
    }
    auto [x, v] = eval(simplex[i]);
    simplex[i] = x;
    fv[i] = v;
  }

  std::vector<std::size_t> order(n + 1);
  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
    const auto best = order.front();
    const auto worst = order.back();
    const auto second = order[n - 1];
    if (at_floor()) {
      result.hit_floor = true;
      result.converged = true;
      return result;
    }
    double diameter = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      double d = 0.0;
      for (std::size_t k = 0; k < n; ++k) d = std::max(d, std::abs(simplex[i][k] - simplex[best][k]));
      diameter = std::max(diameter, d);
    }
    if (std::abs(fv[worst] - fv[best]) <= options.f_tolerance && diameter <= options.x_tolerance) {
      result.converged = true;
      return result;
    }
    if (!budget_left()) return result;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);
    }
    auto along = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t k = 0; k < n; ++k) p[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
      return p;
    };

    auto [xr, fr] = eval(along(-1.0));
    if (fr < fv[best]) {
      if (budget_left()) {
        auto [xe, fe] = eval(along(-2.0));
        if (fe < fr) {
          simplex[worst] = xe;
          fv[worst] = fe;
          continue;
        }
      }
      simplex[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    if (!budget_left()) return result;
    const bool outside = fr < fv[worst];
    auto [xc, fc] = eval(along(outside ? -0.5 : 0.5));
    if (fc < (outside ? fr : fv[worst])) {
      simplex[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      if (!budget_left()) return result;
      std::vector<double> p(n);
      for (std::size_t k = 0; k < n; ++k) p[k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
      auto [xs, fs] = eval(p);
      simplex[i] = xs;
      fv[i] = fs;
    }
  }
}

}  // namespace platelab
