#pragma once

#include <string>
#include <vector>

#include "fullend/dsp/waveform.hpp"

namespace fullend::metrics {

/// SI-SNR is reported within [-60, 60] dB; a perfect estimate reads +60.
inline constexpr double kSiSnrCapDb = 60.0;

/// 10 log10(|s_t|^2 / |e|^2), s_t the projection of zero-mean est onto zero-mean ref.
double si_snr(const dsp::Waveform& est, const dsp::Waveform& ref);

/// ESTOI constants (both signals are first resampled to `sample_rate`).
struct EstoiConstants {
  static constexpr int sample_rate = 10000;
  static constexpr std::size_t frame_len = 256;
  static constexpr std::size_t hop = 128;
  static constexpr std::size_t fft_size = 512;
  static constexpr std::size_t bands = 15;
  static constexpr double min_freq_hz = 150.0;
  static constexpr std::size_t segment_frames = 30;  // 384 ms
  static constexpr double dynamic_range_db = 40.0;
};

/// Extended short-time objective intelligibility of `est` against the clean
/// `ref`. Throws ContractError when fewer than 30 frames remain after
/// silent-frame removal.
double estoi(const dsp::Waveform& est, const dsp::Waveform& ref);

/// Mean over non-overlapping 32 ms frames of 10 log10(|ref|^2 / |ref - est|^2),
/// each frame clamped to [-10, 35] dB.
double seg_snr(const dsp::Waveform& est, const dsp::Waveform& ref);
inline constexpr double kSegSnrMin = -10.0;
inline constexpr double kSegSnrMax = 35.0;

/// Mean over STFT frames of the RMS difference (dB) of 10 log10(|X|^2 + 1e-12).
double log_spectral_distance(const dsp::Waveform& est, const dsp::Waveform& ref);

struct Logistic {
  double m = 0.0;
  double k = 1.0;
  double operator()(double raw) const;
};

/// 1 / (1 + exp(-k (raw - m)))
double logistic_normalize(double raw, double m, double k);
/// m = median, k = 2 / IQR (linear-interpolated quartiles). Zero IQR throws.
Logistic fit_logistic(std::vector<double> samples);

/// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> v, double q);
double median(std::vector<double> v);

}  // namespace fullend::metrics
