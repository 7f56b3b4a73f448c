#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "fullend/dsp/waveform.hpp"

namespace fullend::dsp {

/// Framing parameters. The standard profile is a 32 ms periodic Hann window
/// with an 8 ms hop at 16 kHz and no zero padding (fft_size == window_len).
struct StftConfig {
  std::size_t window_len = 512;
  std::size_t hop = 128;
  std::size_t fft_size = 512;
  int sample_rate = 16000;
  std::vector<double> window;

  static StftConfig standard(int sample_rate = 16000);

  std::size_t bins() const noexcept { return fft_size / 2 + 1; }
  std::size_t pad() const noexcept { return window_len / 2; }
  void validate() const;
};

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

/// frames x bins complex STFT, row-major by frame. `signal_length` remembers the
/// unpadded waveform length so istft can restore it exactly.
struct ComplexSpectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::size_t signal_length = 0;
  std::vector<std::complex<double>> data;
  StftConfig config;

  std::complex<double>& at(std::size_t t, std::size_t k) { return data[t * bins + k]; }
  const std::complex<double>& at(std::size_t t, std::size_t k) const { return data[t * bins + k]; }
  std::span<const std::complex<double>> frame(std::size_t t) const {
    return {data.data() + t * bins, bins};
  }
  void validate() const;
};

/// Number of frames for a signal of `length` samples: frame t is centred on
/// sample t * hop after reflect-padding window_len / 2 on both sides.
std::size_t frame_count(std::size_t length, const StftConfig& config);

/// Reflect-pads (no edge repeat) by `pad` samples on each side. Reflection
/// bounces repeatedly for signals shorter than the pad.
std::vector<double> reflect_pad(std::span<const double> x, std::size_t pad);
std::size_t reflect_index(long i, std::size_t n);

/// Sum over frames of window^2 at every padded sample position.
std::vector<double> window_square_sum(std::size_t frames, const StftConfig& config);

ComplexSpectrogram stft(const Waveform& w, const StftConfig& config);
Waveform istft(const ComplexSpectrogram& spec);

/// Magnitude (or squared magnitude) as frames x bins row-major buffer.
std::vector<double> magnitude(const ComplexSpectrogram& spec);
std::vector<double> power(const ComplexSpectrogram& spec);

/// One-sided Parseval energy of a frame: |X0|^2 + |X_{N/2}|^2 + 2 * sum of the rest.
/// Equals fft_size times the energy of the windowed frame.
double one_sided_energy(std::span<const std::complex<double>> bins, std::size_t fft_size);

}  // namespace fullend::dsp
