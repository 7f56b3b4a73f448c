#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fullend/dsp/matrix.hpp"
#include "fullend/dsp/stft.hpp"
#include "fullend/util/kv_config.hpp"

namespace fullend::noise {

/// Minima-controlled recursive averaging parameters.
struct EstimatorParams {
  double alpha_s = 0.9;         // periodogram smoothing
  std::size_t min_window = 96;  // minima search window, frames
  double bias = 1.5;            // minimum-statistics bias compensation
  double alpha_d = 0.95;        // noise averaging constant when speech is absent
  double alpha_p = 0.2;         // speech-presence probability smoothing
  double delta = 5.0;           // S / S_min ratio above which speech is declared present

  void validate() const;
  /// Reads alpha_s, min_window and bias (plus the secondary constants) from `section`.
  static EstimatorParams from_config(const util::KvConfig& cfg, const std::string& section = "noise");
};

/// Causal streaming noise PSD tracker.
///
/// Per frame: the periodogram is smoothed across frequency (triangular 5-tap)
/// and recursively in time; the minimum of the smoothed power over the last
/// `min_window` frames is tracked; a speech-presence probability derived from
/// S / S_min slows the noise average where speech is likely; the output is the
/// recursive average capped at bias * S_min.
class NoiseEstimator {
 public:
  NoiseEstimator(std::size_t bins, EstimatorParams params = {});

  /// Consumes one STFT frame and returns the noise PSD for that frame.
  std::span<const double> update(std::span<const std::complex<double>> frame);
  void reset();

  std::span<const double> smoothed() const { return smoothed_; }
  std::span<const double> minimum() const { return minimum_; }
  std::span<const double> estimate() const { return estimate_; }
  const EstimatorParams& params() const { return params_; }

 private:
  std::size_t bins_;
  EstimatorParams params_;
  std::size_t frames_seen_ = 0;
  std::vector<double> periodogram_, freq_smoothed_;
  std::vector<double> smoothed_, minimum_, presence_, average_, estimate_;
  std::vector<double> history_;  // ring buffer of min_window x bins smoothed frames
};

/// frames x bins noise PSD of a whole spectrogram; row t depends only on frames <= t.
dsp::Matrix estimate_noise_psd(const dsp::ComplexSpectrogram& noisy, const EstimatorParams& params = {});

/// Oracle mode: recursively smoothed periodogram of the true noise.
dsp::Matrix oracle_noise_psd(const dsp::ComplexSpectrogram& noise_only, double alpha = 0.9);

inline constexpr double kPsdFloor = 1e-10;

/// log(psd + 1e-10) per frame; throws when the frame count differs from
/// `expected_frames` (the companion spectrogram).
dsp::Matrix psd_feature(const dsp::Matrix& psd, std::size_t expected_frames);

}  // namespace fullend::noise
