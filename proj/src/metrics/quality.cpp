#include <algorithm>
#include <cmath>

#include "fullend/dsp/stft.hpp"
#include "fullend/error.hpp"
#include "fullend/metrics/metrics.hpp"

namespace fullend::metrics {

double seg_snr(const dsp::Waveform& est, const dsp::Waveform& ref) {
  if (est.size() != ref.size()) throw ContractError("seg_snr: length mismatch");
  if (est.empty()) throw ContractError("seg_snr: empty input");
  const std::size_t frame = static_cast<std::size_t>(std::lround(0.032 * ref.sample_rate));
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < ref.size(); start += frame) {
    const std::size_t end = std::min(ref.size(), start + frame);
    double sig = 0.0, err = 0.0;
    for (std::size_t i = start; i < end; ++i) {
      const double r = ref.samples[i], e = r - est.samples[i];
      sig += r * r;
      err += e * e;
    }
    // an exact frame is perfect even when silent; noise over silence is the floor
    if (err == 0.0) total += kSegSnrMax;
    else if (sig == 0.0) total += kSegSnrMin;
    else total += std::clamp(10.0 * std::log10(sig / err), kSegSnrMin, kSegSnrMax);
    ++count;
  }
  return total / static_cast<double>(count);
}

double log_spectral_distance(const dsp::Waveform& est, const dsp::Waveform& ref) {
  if (est.size() != ref.size()) throw ContractError("log_spectral_distance: length mismatch");
  if (est.empty()) throw ContractError("log_spectral_distance: empty input");
  const auto cfg = dsp::StftConfig::standard(ref.sample_rate);
  const auto pe = dsp::power(dsp::stft(est, cfg));
  const auto pr = dsp::power(dsp::stft(ref, cfg));
  const std::size_t bins = cfg.bins(), frames = pr.size() / bins;
  double total = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double d = 10.0 * std::log10(pe[t * bins + k] + 1e-12) - 10.0 * std::log10(pr[t * bins + k] + 1e-12);
      acc += d * d;
    }
    total += std::sqrt(acc / static_cast<double>(bins));
  }
  return total / static_cast<double>(frames);
}

}  // namespace fullend::metrics
