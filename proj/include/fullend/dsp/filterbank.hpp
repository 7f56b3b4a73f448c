#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "fullend/dsp/matrix.hpp"

namespace fullend::dsp {

/// One-third octave band layout over the bins of an fft_size-point real FFT.
/// Band b has centre min_freq * 2^(b/3); its edges are snapped to the nearest
/// FFT bins, so consecutive bands share an edge and never overlap.
struct ThirdOctaveLayout {
  std::vector<double> centers_hz;
  std::vector<double> low_hz;   // snapped
  std::vector<double> high_hz;  // snapped
  /// Half-open bin ranges [first, last).
  std::vector<std::pair<std::size_t, std::size_t>> bin_ranges;

  std::size_t bands() const noexcept { return bin_ranges.size(); }
};

ThirdOctaveLayout third_octave_layout(int sample_rate, std::size_t fft_size, std::size_t n_bands = 15,
                                      double min_freq_hz = 150.0);

/// frames x bins magnitudes -> frames x n_bands band amplitudes
/// (sqrt of summed squared magnitudes within each band).
Matrix third_octave_bands(const Matrix& spec_magnitude, int sample_rate, std::size_t n_bands = 15);
Matrix third_octave_bands(const Matrix& spec_magnitude, const ThirdOctaveLayout& layout);

}  // namespace fullend::dsp
