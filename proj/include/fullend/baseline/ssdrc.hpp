#pragma once

#include <utility>
#include <vector>

#include "fullend/baseline/wiener.hpp"
#include "fullend/dsp/waveform.hpp"
#include "fullend/util/kv_config.hpp"

namespace fullend::baseline {

/// Piecewise-linear static curve in dB. Extrapolates with the slope of the
/// end segments.
struct CompressionCurve {
  std::vector<std::pair<double, double>> points;  // (input dB, output dB), input ascending

  static CompressionCurve knee(double threshold_db, double ratio);
  double operator()(double input_db) const;
  void validate() const;
};

struct SsdrcParams {
  // spectral shaping
  double tilt_corner_hz = 1000.0;
  double tilt_db_per_octave = 6.0;
  double tilt_ceiling_hz = 4000.0;  // boost held constant above this
  double sharpening = 0.25;          // exponent on local-peak / broad-envelope ratio
  std::size_t local_smooth_bins = 3;  // half-widths of the two envelope smoothers
  std::size_t broad_smooth_bins = 24;
  double max_sharpen_db = 10.0;
  // dynamic range compression
  double attack_ms = 2.0;
  double release_ms = 20.0;
  double reference_dbfs = -15.0;  // RMS level the DRC sees its input at
  CompressionCurve curve = CompressionCurve::knee(-20.0, 3.0);

  void validate() const;
  static SsdrcParams from_config(const util::KvConfig& cfg);
};

dsp::Waveform spectral_shape(const dsp::Waveform& w, const SsdrcParams& params = {});
dsp::Waveform dynamic_range_compress(const dsp::Waveform& w, const SsdrcParams& params = {});
/// Shaping then compression, rescaled to the input power.
dsp::Waveform ssdrc(const dsp::Waveform& w, const SsdrcParams& params = {});

dsp::Waveform dsppipe(const dsp::Waveform& x, const WienerParams& wiener = {}, const SsdrcParams& ssdrc = {});

/// Regression slope (dB per octave) of the long-term power spectrum between
/// lo_hz and hi_hz.
double spectral_tilt(const dsp::Waveform& w, double lo_hz = 500.0, double hi_hz = 4000.0);

}  // namespace fullend::baseline
