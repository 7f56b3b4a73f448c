#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "fullend/ad/tensor.hpp"
#include "fullend/dsp/waveform.hpp"

namespace fullend::testing {

inline dsp::Waveform white(std::uint64_t seed, std::size_t n, double stddev = 0.1, int sr = 16000) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, stddev);
  std::vector<double> s(n);
  for (auto& v : s) v = d(rng);
  return {std::move(s), sr};
}

inline dsp::Waveform sine(double freq, std::size_t n, double amp = 1.0, int sr = 16000, double phase = 0.0) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i)
    s[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / sr + phase);
  return {std::move(s), sr};
}

inline ad::Tensor random_tensor(const ad::Shape& shape, std::uint64_t seed, double stddev = 1.0,
                                bool requires_grad = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, stddev);
  std::vector<double> v(ad::shape_size(shape));
  for (auto& x : v) x = d(rng);
  return ad::Tensor::from(shape, std::move(v), requires_grad);
}

/// Direct O(N^2) DFT, the oracle for FFT-based code.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(a), std::sin(a));
    }
    out[k] = acc;
  }
  return out;
}

/// |DTFT| of x at an arbitrary frequency.
inline double dtft_magnitude(const std::vector<double>& x, double freq, int sr) {
  std::complex<double> acc = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double a = -2.0 * std::numbers::pi * freq * static_cast<double>(t) / sr;
    acc += x[t] * std::complex<double>(std::cos(a), std::sin(a));
  }
  return std::abs(acc);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace fullend::testing
