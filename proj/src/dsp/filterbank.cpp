#include "fullend/dsp/filterbank.hpp"

#include <cmath>

#include "fullend/error.hpp"

namespace fullend::dsp {
namespace {

std::size_t nearest_bin(double freq, int sample_rate, std::size_t fft_size) {
  const std::size_t bins = fft_size / 2 + 1;
  std::size_t best = 0;
  double best_err = 1e300;
  for (std::size_t k = 0; k < bins; ++k) {
    const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
    const double err = (f - freq) * (f - freq);
    if (err < best_err) {
      best_err = err;
      best = k;
    }
  }
  return best;
}

}  // namespace

ThirdOctaveLayout third_octave_layout(int sample_rate, std::size_t fft_size, std::size_t n_bands,
                                      double min_freq_hz) {
  if (sample_rate <= 0 || fft_size < 2 || n_bands == 0)
    throw ContractError("third_octave_layout: invalid arguments");
  const double top = min_freq_hz * std::pow(2.0, (2.0 * (n_bands - 1) + 1.0) / 6.0);
  if (top > sample_rate / 2.0)
    throw ContractError("third_octave_layout: sample rate too low to cover the highest band");

  ThirdOctaveLayout layout;
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
  for (std::size_t b = 0; b < n_bands; ++b) {
    const double k = static_cast<double>(b);
    const std::size_t lo = nearest_bin(min_freq_hz * std::pow(2.0, (2.0 * k - 1.0) / 6.0), sample_rate, fft_size);
    const std::size_t hi = nearest_bin(min_freq_hz * std::pow(2.0, (2.0 * k + 1.0) / 6.0), sample_rate, fft_size);
    layout.centers_hz.push_back(min_freq_hz * std::pow(2.0, k / 3.0));
    layout.low_hz.push_back(static_cast<double>(lo) * bin_hz);
    layout.high_hz.push_back(static_cast<double>(hi) * bin_hz);
    layout.bin_ranges.emplace_back(lo, hi);
  }
  return layout;
}

Matrix third_octave_bands(const Matrix& spec_magnitude, const ThirdOctaveLayout& layout) {
  Matrix out(spec_magnitude.rows, layout.bands());
  for (std::size_t t = 0; t < spec_magnitude.rows; ++t) {
    auto row = spec_magnitude.row(t);
    for (std::size_t b = 0; b < layout.bands(); ++b) {
      const auto [lo, hi] = layout.bin_ranges[b];
      if (hi > row.size()) throw ContractError("third_octave_bands: band exceeds bin count");
      double acc = 0.0;
      for (std::size_t k = lo; k < hi; ++k) {
        if (row[k] < 0.0) throw ContractError("third_octave_bands: negative magnitude");
        acc += row[k] * row[k];
      }
      out(t, b) = std::sqrt(acc);
    }
  }
  return out;
}

Matrix third_octave_bands(const Matrix& spec_magnitude, int sample_rate, std::size_t n_bands) {
  if (spec_magnitude.cols < 2) throw ContractError("third_octave_bands: need at least two bins");
  const std::size_t fft_size = 2 * (spec_magnitude.cols - 1);
  return third_octave_bands(spec_magnitude, third_octave_layout(sample_rate, fft_size, n_bands));
}

}  // namespace fullend::dsp
