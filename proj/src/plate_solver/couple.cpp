#include "platelab/plate_solver/couple.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "platelab/core/errors.hpp"
#include "platelab/core/fourier.hpp"
#include "platelab/core/keyvalue.hpp"

namespace platelab::plate_solver {

CoupleField::CoupleField(std::vector<double> m_n, std::vector<double> m_tau)
    : m_n_(std::move(m_n)), m_tau_(std::move(m_tau)) {
  if (m_n_.size() != m_tau_.size()) throw InvalidInputError("couple: m_n and m_tau differ in length");
  if (m_n_.empty()) throw InvalidInputError("couple: empty data");
  for (std::size_t j = 0; j < m_n_.size(); ++j) {
    if (!std::isfinite(m_n_[j]) || !std::isfinite(m_tau_[j])) throw InvalidInputError("couple: non-finite sample");
  }
}

bool CoupleField::is_zero() const {
  return std::all_of(m_n_.begin(), m_n_.end(), [](double v) { return v == 0.0; }) &&
         std::all_of(m_tau_.begin(), m_tau_.end(), [](double v) { return v == 0.0; });
}

CoupleField CoupleField::scaled(double s) const {
  auto n = m_n_, t = m_tau_;
  for (auto& v : n) v *= s;
  for (auto& v : t) v *= s;
  return {std::move(n), std::move(t)};
}

CoupleField CoupleField::plus(const CoupleField& other) const {
  const auto o = other.size() == size() ? other : other.resampled(size());
  auto n = m_n_, t = m_tau_;
  for (std::size_t j = 0; j < n.size(); ++j) {
    n[j] += o.m_n_[j];
    t[j] += o.m_tau_[j];
  }
  return {std::move(n), std::move(t)};
}

CoupleField CoupleField::resampled(std::size_t n) const {
  if (n == size()) return *this;
  return {fourier::resample(m_n_, static_cast<int>(n)), fourier::resample(m_tau_, static_cast<int>(n))};
}

std::vector<double> CoupleField::m_tau_derivative(double perimeter) const {
  return fourier::derivative(m_tau_, perimeter);
}

std::vector<Vec2> CoupleField::cartesian(const geometry::PlanarDomain& domain) const {
  std::vector<Vec2> out(size());
  for (std::size_t j = 0; j < size(); ++j) {
    const double f = fraction(j);
    out[j] = m_tau_[j] * domain.tangent_at(f) + m_n_[j] * domain.normal_at(f);
  }
  return out;
}

CoupleField default_couple(const geometry::PlanarDomain& domain, std::size_t samples, double amplitude) {
  if (samples < 16) throw InvalidInputError("couple: need at least 16 samples");
  const auto& sigma = domain.sigma();
  std::vector<double> bump(samples, 0.0);
  std::vector<Vec2> normal(samples), tangent(samples);
  const double ds = domain.perimeter() / static_cast<double>(samples);
  double mass = 0.0;
  Vec2 resultant = Vec2::Zero();
  for (std::size_t j = 0; j < samples; ++j) {
    const double f = static_cast<double>(j) / static_cast<double>(samples);
    normal[j] = domain.normal_at(f);
    tangent[j] = domain.tangent_at(f);
    const double t = sigma.relative(f);
    if (t < 0.0) continue;
    const double u = 3.0 * (t - 0.5);  // middle third of Sigma maps to [-1/2, 1/2]
    if (std::abs(u) >= 0.5) continue;
    const double c = std::cos(std::numbers::pi * u);
    bump[j] = amplitude * c * c;
    mass += bump[j] * ds;
    resultant += bump[j] * normal[j] * ds;
  }
  if (mass <= 0.0) throw GeometryError("couple: Sigma too short for the default bump at this sampling");
  const Vec2 shift = resultant / mass;
  std::vector<double> m_n(samples), m_tau(samples);
  for (std::size_t j = 0; j < samples; ++j) {
    const Vec2 m = bump[j] * (normal[j] - shift);
    m_n[j] = m.dot(normal[j]);
    m_tau[j] = m.dot(tangent[j]);
  }
  return {std::move(m_n), std::move(m_tau)};
}

CoupleField couple_from_hessian(const geometry::PlanarDomain& domain, const material::IsotropicPlate& plate,
                                const std::function<material::Mat2(const Vec2&)>& hessian, std::size_t samples) {
  std::vector<double> m_n(samples), m_tau(samples);
  for (std::size_t j = 0; j < samples; ++j) {
    const double f = static_cast<double>(j) / static_cast<double>(samples);
    const Vec2 x = domain.point_at(f);
    const auto s = plate.sample(x);
    const material::Mat2 M = material::plate_tensor_apply(s.B, s.nu, hessian(x));
    const Vec2 n = domain.normal_at(f);
    m_n[j] = -(M * n).dot(n);
    m_tau[j] = -(M * n).dot(domain.tangent_at(f));
  }
  return {std::move(m_n), std::move(m_tau)};
}

double h_minus_half_surrogate(const CoupleField& couple, const geometry::PlanarDomain& domain) {
  if (couple.size() == 0) throw InvalidInputError("surrogate: empty data");
  const auto m = couple.cartesian(domain);
  const double P = domain.perimeter();
  const int n = static_cast<int>(m.size());
  double acc = 0.0;
  for (int comp = 0; comp < 2; ++comp) {
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) v[j] = m[j][comp];
    const auto c = fourier::coefficients(v);
    for (int k = 0; k < n; ++k) {
      const double kappa = 2.0 * std::numbers::pi * fourier::signed_mode(k, n) / P;
      acc += std::norm(c[k]) / std::sqrt(1.0 + kappa * kappa);
    }
  }
  return std::sqrt(P * acc);
}

double l2_norm(const CoupleField& couple, const geometry::PlanarDomain& domain) {
  const auto m = couple.cartesian(domain);
  double acc = 0.0;
  for (const auto& v : m) acc += v.squaredNorm();
  return std::sqrt(acc * domain.perimeter() / static_cast<double>(m.size()));
}

CoupleValidation validate_couple(const CoupleField& couple, const geometry::PlanarDomain& domain, double F,
                                 double compatibility_tolerance) {
  CoupleValidation v;
  const std::size_t n = couple.size();
  const auto& sigma = domain.sigma();
  // Compact support: nonzero samples strictly inside Sigma, with a zero margin of one sample.
  v.support_in_sigma = true;
  for (std::size_t j = 0; j < n; ++j) {
    if (couple.m_n()[j] == 0.0 && couple.m_tau()[j] == 0.0) continue;
    const double step = 1.0 / static_cast<double>(n);
    const double f = couple.fraction(j);
    if (!sigma.contains(f) || !sigma.contains(f - step) || !sigma.contains(f + step)) {
      v.support_in_sigma = false;
      break;
    }
  }
  const auto m = couple.cartesian(domain);
  const double ds = domain.perimeter() / static_cast<double>(n);
  double scale = 0.0;
  for (const auto& x : m) {
    v.resultant += x * ds;
    scale += x.norm() * ds;
  }
  v.resultant_relative = scale > 0.0 ? v.resultant.norm() / scale : 0.0;
  v.compatible = v.resultant_relative <= compatibility_tolerance;
  const auto dtau = couple.m_tau_derivative(domain.perimeter());
  v.nontrivial = false;
  for (std::size_t j = 0; j < n; ++j) {
    if (couple.m_n()[j] != 0.0 || std::abs(dtau[j]) > 1e-14) v.nontrivial = true;
  }
  v.frequency_bound = F;
  if (v.nontrivial) {
    v.frequency_ratio = l2_norm(couple, domain) / h_minus_half_surrogate(couple, domain);
    v.frequency_ok = v.frequency_ratio <= F;
  }
  return v;
}

CoupleField read_couple_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open couple file '" + path.string() + "'");
  std::vector<std::array<double, 3>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (std::isalpha(static_cast<unsigned char>(line[0]))) continue;  // header
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
  if (rows.size() < 4) throw ConfigError(path.string() + ": need at least 4 samples");
  std::sort(rows.begin(), rows.end());
  const std::size_t n = rows.size();
  bool uniform = true;
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(rows[j][0] - static_cast<double>(j) / n) > 1e-9) uniform = false;
  }
  std::vector<double> m_n(n), m_tau(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (uniform) {
      m_n[j] = rows[j][1];
      m_tau[j] = rows[j][2];
      continue;
    }
    // Periodic linear interpolation at fraction j/n.
    const double f = static_cast<double>(j) / n;
    std::size_t k = 0;
    while (k < n && rows[k][0] <= f) ++k;
    const auto& a = rows[(k + n - 1) % n];
    const auto& b = rows[k % n];
    double fa = a[0], fb = b[0];
    double x = f;
    if (fb <= fa) {
      fb += 1.0;
      if (x < fa) x += 1.0;
    }
    const double t = fb > fa ? (x - fa) / (fb - fa) : 0.0;
    m_n[j] = (1 - t) * a[1] + t * b[1];
    m_tau[j] = (1 - t) * a[2] + t * b[2];
  }
  return {std::move(m_n), std::move(m_tau)};
}

void write_couple_csv(const CoupleField& couple, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write couple file '" + path.string() + "'");
  out << "arc_length_fraction,m_n,m_tau\n";
  for (std::size_t j = 0; j < couple.size(); ++j) {
    out << format_double(couple.fraction(j)) << "," << format_double(couple.m_n()[j]) << ","
        << format_double(couple.m_tau()[j]) << "\n";
  }
}

}  // namespace platelab::plate_solver
