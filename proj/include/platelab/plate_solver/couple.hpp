#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "platelab/geometry/domain.hpp"
#include "platelab/material/plate.hpp"

namespace platelab::plate_solver {

using geometry::Vec2;

// Boundary couple sampled at uniform arc-length fractions j/N of the domain
// boundary (counterclockwise from theta = 0).
class CoupleField {
 public:
  CoupleField() = default;
  CoupleField(std::vector<double> m_n, std::vector<double> m_tau);

  std::size_t size() const { return m_n_.size(); }
  const std::vector<double>& m_n() const { return m_n_; }
  const std::vector<double>& m_tau() const { return m_tau_; }
  double fraction(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(size()); }
  bool is_zero() const;

  CoupleField scaled(double s) const;
  CoupleField plus(const CoupleField& other) const;
  // Trigonometric interpolation onto n uniform samples.
  CoupleField resampled(std::size_t n) const;
  // d(m_tau)/ds by spectral differentiation.
  std::vector<double> m_tau_derivative(double perimeter) const;
  // M = m_tau tau + m_n n at every sample.
  std::vector<Vec2> cartesian(const geometry::PlanarDomain& domain) const;

 private:
  std::vector<double> m_n_, m_tau_;
};

// cos^2 bump of the bending moment on the middle third of Sigma, corrected
// by a multiple of the bump so that the Cartesian moment integrates to zero.
CoupleField default_couple(const geometry::PlanarDomain& domain, std::size_t samples = 2048, double amplitude = 1.0);

// Couple produced on the whole boundary by a field with Hessian `hessian(x)`:
// m_n = -(P hess n . n), m_tau = -(P hess n . tau).
CoupleField couple_from_hessian(const geometry::PlanarDomain& domain, const material::IsotropicPlate& plate,
                                const std::function<material::Mat2(const Vec2&)>& hessian, std::size_t samples = 2048);

// Fourier surrogate of the H^{-1/2} norm of the Cartesian couple.
double h_minus_half_surrogate(const CoupleField& couple, const geometry::PlanarDomain& domain);
double l2_norm(const CoupleField& couple, const geometry::PlanarDomain& domain);

struct CoupleValidation {
  bool support_in_sigma = false;  // support compactly inside Sigma
  Vec2 resultant = Vec2::Zero();  // integral of the Cartesian couple
  double resultant_relative = 0.0;
  bool compatible = false;
  bool nontrivial = false;
  double frequency_ratio = 0.0;
  double frequency_bound = 0.0;
  bool frequency_ok = false;
  bool passed() const { return support_in_sigma && compatible && nontrivial && frequency_ok; }
};

CoupleValidation validate_couple(const CoupleField& couple, const geometry::PlanarDomain& domain, double F = 20.0,
                                 double compatibility_tolerance = 1e-10);

// CSV columns: arc_length_fraction, m_n, m_tau. Non-uniform fractions are
// resampled onto a uniform grid by periodic linear interpolation.
CoupleField read_couple_csv(const std::filesystem::path& path);
void write_couple_csv(const CoupleField& couple, const std::filesystem::path& path);

}  // namespace platelab::plate_solver
