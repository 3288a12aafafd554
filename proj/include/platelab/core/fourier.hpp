#pragma once

#include <complex>
#include <span>
#include <vector>

namespace platelab::fourier {

// c_k = (1/N) sum_j f_j exp(-2 pi i j k / N), k = 0..N-1.
std::vector<std::complex<double>> coefficients(std::span<const double> samples);

// Mode number of FFT bin k for length n (aliased to [-n/2, n/2]).
int signed_mode(int k, int n);

// Derivative of a periodic function sampled at n uniform points over `period`.
// The Nyquist mode is dropped.
std::vector<double> derivative(std::span<const double> samples, double period);

// Trigonometric interpolation onto m uniform points (same period, same origin).
std::vector<double> resample(std::span<const double> samples, int m);

// Trigonometric interpolant evaluated at fractional position t in [0,1).
double evaluate(std::span<const std::complex<double>> coeffs, double t);

}  // namespace platelab::fourier
