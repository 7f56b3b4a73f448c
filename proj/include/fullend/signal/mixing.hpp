#pragma once

#include "fullend/dsp/waveform.hpp"

namespace fullend::signal {

struct Mixture {
  dsp::Waveform mixture;
  dsp::Waveform scaled_noise;
  double noise_scale = 1.0;
};

/// Scales `noise` (never the signal) so that 10 log10(P(signal) / P(scaled_noise))
/// equals snr_db, with P the mean square over the whole utterance.
Mixture mix_at_snr(const dsp::Waveform& signal, const dsp::Waveform& noise, double snr_db);

/// o = y + v, the signal reaching the near-end listener.
dsp::Waveform observe(const dsp::Waveform& y, const dsp::Waveform& v);

double snr_db(const dsp::Waveform& signal, const dsp::Waveform& noise);

}  // namespace fullend::signal
