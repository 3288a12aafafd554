#include "platelab/core/fourier.hpp"

#include <cmath>
#include <numbers>
#include <unsupported/Eigen/FFT>

#include "platelab/core/errors.hpp"

namespace platelab::fourier {

std::vector<std::complex<double>> coefficients(std::span<const double> samples) {
  if (samples.empty()) throw InvalidInputError("fourier: empty sample vector");
  Eigen::FFT<double> fft;
  std::vector<double> in(samples.begin(), samples.end());
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  out.resize(samples.size());
  // Eigen fills the full spectrum unless HalfSpectrum is set.
  const double n = static_cast<double>(samples.size());
  for (auto& c : out) c /= n;
  return out;
}

int signed_mode(int k, int n) { return k <= n / 2 ? k : k - n; }

std::vector<double> derivative(std::span<const double> samples, double period) {
  const int n = static_cast<int>(samples.size());
  auto c = coefficients(samples);
  const double w = 2.0 * std::numbers::pi / period;
  for (int k = 0; k < n; ++k) {
    const int m = signed_mode(k, n);
    if (n % 2 == 0 && k == n / 2) {
      c[k] = 0.0;
    } else {
      c[k] *= std::complex<double>(0.0, w * m);
    }
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec(c.begin(), c.end());
  for (auto& z : spec) z *= static_cast<double>(n);
  std::vector<std::complex<double>> back;
  fft.inv(back, spec);
  std::vector<double> out(n);
  for (int j = 0; j < n; ++j) out[j] = back[j].real();
  return out;
}

std::vector<double> resample(std::span<const double> samples, int m) {
  const int n = static_cast<int>(samples.size());
  if (m <= 0) throw InvalidInputError("fourier: resample target must be positive");
  if (m == n) return {samples.begin(), samples.end()};
  const auto c = coefficients(samples);
  std::vector<std::complex<double>> spec(m, 0.0);
  for (int k = 0; k < n; ++k) {
    const int mode = signed_mode(k, n);
    const std::complex<double> v = c[k];
    if (n % 2 == 0 && k == n / 2) {
      // Source Nyquist term is a pure cosine; split it over +-n/2 when upsampling.
      if (m > n) {
        spec[n / 2] += 0.5 * v;
        spec[m - n / 2] += 0.5 * v;
      }
      continue;
    }
    if (2 * std::abs(mode) > m) continue;
    if (m % 2 == 0 && 2 * std::abs(mode) == m) {
      spec[m / 2] += v;
      continue;
    }
    spec[(mode + m) % m] += v;
  }
  Eigen::FFT<double> fft;
  for (auto& z : spec) z *= static_cast<double>(m);
  std::vector<std::complex<double>> back;
  fft.inv(back, spec);
  std::vector<double> out(m);
  for (int j = 0; j < m; ++j) out[j] = back[j].real();
  return out;
}

double evaluate(std::span<const std::complex<double>> coeffs, double t) {
  const int n = static_cast<int>(coeffs.size());
  std::complex<double> acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const int m = signed_mode(k, n);
    std::complex<double> c = coeffs[k];
    if (n % 2 == 0 && k == n / 2) {
      acc += c * std::cos(2.0 * std::numbers::pi * m * t);
      continue;
    }
    acc += c * std::exp(std::complex<double>(0.0, 2.0 * std::numbers::pi * m * t));
  }
  return acc.real();
}

}  // namespace platelab::fourier
