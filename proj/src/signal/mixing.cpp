#include "fullend/signal/mixing.hpp"

#include <cmath>

#include "fullend/error.hpp"

namespace fullend::signal {

Mixture mix_at_snr(const dsp::Waveform& signal, const dsp::Waveform& noise, double snr_db) {
  if (signal.size() != noise.size()) throw ContractError("mix_at_snr: length mismatch");
  if (signal.sample_rate != noise.sample_rate) throw ContractError("mix_at_snr: sample rate mismatch");
  if (!std::isfinite(snr_db)) throw ContractError("mix_at_snr: SNR must be finite");
  const double ps = signal.power();
  const double pn = noise.power();
  if (ps <= 0.0) throw ContractError("mix_at_snr: signal has zero power");
  if (pn <= 0.0) throw ContractError("mix_at_snr: noise has zero power");

  Mixture m;
  m.noise_scale = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  m.scaled_noise = noise;
  m.mixture = signal;
  for (std::size_t i = 0; i < signal.size(); ++i) {
    m.scaled_noise.samples[i] = noise.samples[i] * m.noise_scale;
    m.mixture.samples[i] = signal.samples[i] + m.scaled_noise.samples[i];
  }
  return m;
}

dsp::Waveform observe(const dsp::Waveform& y, const dsp::Waveform& v) {
  if (y.size() != v.size()) throw ContractError("observe: length mismatch");
  dsp::Waveform o = y;
  for (std::size_t i = 0; i < y.size(); ++i) o.samples[i] += v.samples[i];
  return o;
}

double snr_db(const dsp::Waveform& signal, const dsp::Waveform& noise) {
  return 10.0 * std::log10(signal.power() / noise.power());
}

}  // namespace fullend::signal
