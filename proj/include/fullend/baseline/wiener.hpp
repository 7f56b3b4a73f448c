#pragma once

#include "fullend/dsp/matrix.hpp"
#include "fullend/dsp/stft.hpp"
#include "fullend/dsp/waveform.hpp"
#include "fullend/noise/noise_estimator.hpp"
#include "fullend/util/kv_config.hpp"

namespace fullend::baseline {

struct WienerParams {
  double beta_dd = 0.98;    // decision-directed smoothing
  double gain_floor = 0.1;  // G_min, -20 dB
  noise::EstimatorParams noise{};

  void validate() const;
  static WienerParams from_config(const util::KvConfig& cfg);
};

/// G = xi / (1 + xi), clamped to [floor, 1].
double wiener_gain(double xi, double floor);

/// Streaming decision-directed Wiener gain computer (no look-ahead).
class WienerFilter {
 public:
  WienerFilter(std::size_t bins, WienerParams params);

  /// Returns the gains for one frame given its noise PSD row.
  std::span<const double> update(std::span<const std::complex<double>> frame, std::span<const double> noise_psd);

 private:
  WienerParams params_;
  bool first_ = true;
  std::vector<double> prev_clean_power_;
  std::vector<double> gains_;
};

struct WienerResult {
  dsp::Waveform output;
  dsp::Matrix gains;  // frames x bins
};

/// Noise PSD from the minima-controlled estimator run on x itself.
WienerResult wiener_enhance_traced(const dsp::Waveform& x, const WienerParams& params = {});
/// Noise PSD supplied by the caller (oracle mode).
WienerResult wiener_enhance_with_psd(const dsp::Waveform& x, const dsp::Matrix& noise_psd,
                                     const WienerParams& params = {});
dsp::Waveform wiener_enhance(const dsp::Waveform& x, const WienerParams& params = {});

}  // namespace fullend::baseline
