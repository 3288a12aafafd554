#include "platelab/boundary_data/traces.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "platelab/core/errors.hpp"
#include "platelab/core/keyvalue.hpp"
#include "platelab/core/nelder_mead.hpp"

namespace platelab::boundary_data {

TraceData trace_layout(const PlanarDomain& domain, std::size_t n) {
  if (n < 4) throw UnderdeterminedError("traces: need at least 4 samples");
  TraceData t;
  t.sigma = domain.sigma();
  t.r0 = domain.constants().r0;
  t.step = t.sigma.length_fraction() * domain.perimeter() / static_cast<double>(n);
  t.fractions.resize(n);
  t.points.resize(n);
  t.normals.resize(n);
  t.w.assign(n, 0.0);
  t.dn.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = t.sigma.at((static_cast<double>(k) + 0.5) / static_cast<double>(n));
    t.fractions[k] = f;
    t.points[k] = domain.point_at(f);
    t.normals[k] = domain.normal_at(f);
  }
  return t;
}

TraceData extract_traces(const plate_solver::DiscreteSolution& solution, const PlanarDomain& domain,
                         std::size_t n) {
  TraceData t = trace_layout(domain, n);
  for (std::size_t k = 0; k < n; ++k) {
    t.w[k] = solution.value(t.points[k]);
    t.dn[k] = solution.normal_derivative(t.fractions[k]);
    if (!std::isfinite(t.w[k]) || !std::isfinite(t.dn[k])) {
      throw GeometryError("traces: Sigma sample at fraction " + std::to_string(t.fractions[k]) +
                          " is outside the solved grid");
    }
  }
  return t;
}

TraceData analytic_traces(const PlanarDomain& domain, const std::function<double(const Vec2&)>& w,
                          const std::function<Vec2(const Vec2&)>& grad, std::size_t n) {
  TraceData t = trace_layout(domain, n);
  for (std::size_t k = 0; k < n; ++k) {
    t.w[k] = w(t.points[k]);
    t.dn[k] = grad(t.points[k]).dot(t.normals[k]);
  }
  return t;
}

TraceData add_affine(const TraceData& t, const Affine& g) {
  TraceData out = t;
  for (std::size_t k = 0; k < t.size(); ++k) {
    out.w[k] += g(t.points[k]);
    out.dn[k] += g.c[1] * t.normals[k].x() + g.c[2] * t.normals[k].y();
  }
  return out;
}

namespace {

void check_pair(const TraceData& a, const TraceData& b) {
  if (a.size() < 4 || b.size() < 4) throw UnderdeterminedError("gauge misfit: fewer than 4 samples");
  if (a.size() != b.size()) throw InvalidInputError("gauge misfit: traces sampled differently");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if ((a.points[k] - b.points[k]).norm() > 1e-9) throw InvalidInputError("gauge misfit: traces sampled differently");
  }
}

// Residual norms of the difference traces against g.
std::pair<double, double> residual_norms(const std::vector<double>& a, const std::vector<double>& b,
                                         const TraceData& t, const Affine& g) {
  double sa = 0.0, sb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double ra = a[k] - g(t.points[k]);
    const double rb = b[k] - (g.c[1] * t.normals[k].x() + g.c[2] * t.normals[k].y());
    sa += ra * ra;
    sb += rb * rb;
  }
  return {std::sqrt(sa * t.step), std::sqrt(sb * t.step)};
}

}  // namespace

double gauge_objective(const TraceData& t1, const TraceData& t2, const Affine& g) {
  check_pair(t1, t2);
  std::vector<double> a(t1.size()), b(t1.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    a[k] = t1.w[k] - t2.w[k];
    b[k] = t1.dn[k] - t2.dn[k];
  }
  const auto [na, nb] = residual_norms(a, b, t1, g);
  return na + t1.r0 * nb;
}

GaugeMisfit gauge_min_misfit(const TraceData& t1, const TraceData& t2) {
  check_pair(t1, t2);
  const std::size_t n = t1.size();
  const double r0 = t1.r0;
  std::vector<double> a(n), b(n);
  for (std::size_t k = 0; k < n; ++k) {
    a[k] = t1.w[k] - t2.w[k];
    b[k] = t1.dn[k] - t2.dn[k];
  }
  // Least squares on ||a - g||^2 + r0^2 ||b - dn g||^2. Coordinates are
  // centred on the sample mean for conditioning.
  Vec2 centre = Vec2::Zero();
  for (const auto& p : t1.points) centre += p;
  centre /= static_cast<double>(n);
  Eigen::MatrixXd A(2 * n, 3);
  Eigen::VectorXd y(2 * n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 x = t1.points[k] - centre;
    A.row(k) << 1.0, x.x(), x.y();
    y[k] = a[k];
    A.row(n + k) << 0.0, r0 * t1.normals[k].x(), r0 * t1.normals[k].y();
    y[n + k] = r0 * b[k];
  }
  const Eigen::Vector3d c = A.colPivHouseholderQr().solve(y);
  auto to_affine = [&](const std::vector<double>& v) {
    return Affine{{v[0] - v[1] * centre.x() - v[2] * centre.y(), v[1], v[2]}};
  };
  auto objective = [&](const std::vector<double>& v) {
    const auto [na, nb] = residual_norms(a, b, t1, to_affine(v));
    return na + r0 * nb;
  };
  GaugeMisfit out;
  const std::vector<double> x0{c[0], c[1], c[2]};
  out.surrogate_epsilon = objective(x0);
  if (out.surrogate_epsilon == 0.0) {
    out.g = to_affine(x0);
    return out;
  }
  // Polish the sum of norms; steps scaled to the residual size.
  double extent = 0.0;
  for (const auto& p : t1.points) extent = std::max(extent, (p - centre).norm());
  const double len = std::sqrt(t1.step * static_cast<double>(n));
  const double s = out.surrogate_epsilon / len;
  NelderMeadOptions opt;
  opt.max_evaluations = 4000;
  opt.f_tolerance = 1e-15 * out.surrogate_epsilon;
  opt.x_tolerance = 1e-13 * (std::abs(c[0]) + s);
  auto best = nelder_mead(objective, x0, {0.1 * s, 0.1 * s / std::max(extent, r0), 0.1 * s / std::max(extent, r0)}, opt);
  // Restart once from the polished point to shake off a collapsed simplex.
  const auto again = nelder_mead(objective, best.x, {0.01 * s, 0.01 * s / std::max(extent, r0), 0.01 * s / std::max(extent, r0)}, opt);
  out.evaluations = best.evaluations + again.evaluations;
  if (again.f <= best.f) best = again;
  if (best.f <= out.surrogate_epsilon) {
    out.epsilon = best.f;
    out.g = to_affine(best.x);
  } else {
    out.epsilon = out.surrogate_epsilon;
    out.g = to_affine(x0);
  }
  return out;
}

TraceData add_noise(const TraceData& t, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) throw InvalidInputError("noise level must be nonnegative");
  TraceData out = t;
  out.noise_level = level;
  out.seed = seed;
  if (level == 0.0) return out;
  auto rms = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
  };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sw = level * rms(t.w), sd = level * rms(t.dn);
  for (auto& x : out.w) x += sw * normal(rng);
  for (auto& x : out.dn) x += sd * normal(rng);
  return out;
}

void write_traces(const TraceData& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trace file '" + path.string() + "'");
  out << "arc_length_fraction,w,dn_w\n";
  for (std::size_t k = 0; k < t.size(); ++k) {
    out << format_double(t.fractions[k]) << "," << format_double(t.w[k]) << "," << format_double(t.dn[k]) << "\n";
  }
  nlohmann::ordered_json meta = {
      {"sigma", {t.sigma.begin, t.sigma.end}},
      {"r0", t.r0},
      {"samples", t.size()},
      {"step", t.step},
      {"noise_level", t.noise_level},
      {"seed", t.seed},
      {"quadrature", "midpoint"},
      {"w_interpolation", "bicubic"},
      {"dn_difference", "one-sided fourth order"},
  };
  std::ofstream side(path.string() + ".json");
  side << meta.dump(2) << "\n";
}

TraceData read_traces(const std::filesystem::path& path, const PlanarDomain& domain) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file '" + path.string() + "'");
  std::vector<std::array<double, 3>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
    std::stringstream ss(line);
    std::array<double, 3> r{};
    std::string item;
    for (int c = 0; c < 3; ++c) {
      if (!std::getline(ss, item, ',')) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 3 columns");
      try {
        r[c] = std::stod(item);
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + item + "'");
      }
    }
    rows.push_back(r);
  }
  TraceData t = trace_layout(domain, rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (std::abs(rows[k][0] - t.fractions[k]) > 1e-9) {
      throw ConfigError(path.string() + ": sample " + std::to_string(k) + " is not on the Sigma layout of the domain");
    }
    t.w[k] = rows[k][1];
    t.dn[k] = rows[k][2];
  }
  std::ifstream side(path.string() + ".json");
  if (side) {
    try {
      const auto meta = nlohmann::json::parse(side);
      t.noise_level = meta.value("noise_level", 0.0);
      t.seed = meta.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ".json: " + e.what());
    }
  }
  return t;
}

}  // namespace platelab::boundary_data
