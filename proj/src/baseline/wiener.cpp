#include "fullend/baseline/wiener.hpp"

#include <algorithm>
#include <cmath>

#include "fullend/error.hpp"

namespace fullend::baseline {

void WienerParams::validate() const {
  if (!(beta_dd > 0.0 && beta_dd < 1.0)) throw ContractError("wiener: beta_dd must lie in (0, 1)");
  if (!(gain_floor > 0.0 && gain_floor <= 1.0)) throw ContractError("wiener: gain floor must lie in (0, 1]");
  noise.validate();
}

WienerParams WienerParams::from_config(const util::KvConfig& cfg) {
  WienerParams p;
  p.beta_dd = cfg.get_double("wiener.beta_dd", p.beta_dd);
  p.gain_floor = cfg.get_double("wiener.gain_floor", p.gain_floor);
  p.noise = noise::EstimatorParams::from_config(cfg, "wiener_noise");
  p.validate();
  return p;
}

double wiener_gain(double xi, double floor) {
  if (std::isinf(xi)) return 1.0;
  return std::clamp(xi / (1.0 + xi), floor, 1.0);
}

WienerFilter::WienerFilter(std::size_t bins, WienerParams params)
    : params_(params), prev_clean_power_(bins, 0.0), gains_(bins, 1.0) {
  params_.validate();
}

std::span<const double> WienerFilter::update(std::span<const std::complex<double>> frame,
                                             std::span<const double> noise_psd) {
  if (frame.size() != gains_.size() || noise_psd.size() != gains_.size())
    throw ContractError("wiener: frame size mismatch");
  for (std::size_t k = 0; k < gains_.size(); ++k) {
    const double power = std::norm(frame[k]);
    const double lambda = noise_psd[k];
    double g = 1.0;
    if (lambda > 1e-20) {
      const double gamma = power / lambda;
      const double ml = std::max(gamma - 1.0, 0.0);
      const double xi =
          first_ ? ml : params_.beta_dd * prev_clean_power_[k] / lambda + (1.0 - params_.beta_dd) * ml;
      g = wiener_gain(xi, params_.gain_floor);
    }
    gains_[k] = g;
    prev_clean_power_[k] = g * g * power;
  }
  first_ = false;
  return gains_;
}

WienerResult wiener_enhance_with_psd(const dsp::Waveform& x, const dsp::Matrix& noise_psd, const WienerParams& params) {
  params.validate();
  const auto config = dsp::StftConfig::standard(x.sample_rate);
  dsp::ComplexSpectrogram spec = dsp::stft(x, config);
  if (noise_psd.rows != spec.frames || noise_psd.cols != spec.bins)
    throw ContractError("wiener: noise PSD shape does not match the spectrogram");
  WienerFilter filter(spec.bins, params);
  WienerResult r;
  r.gains = dsp::Matrix(spec.frames, spec.bins);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    auto g = filter.update(spec.frame(t), noise_psd.row(t));
    for (std::size_t k = 0; k < spec.bins; ++k) {
      r.gains(t, k) = g[k];
      spec.at(t, k) *= g[k];
    }
  }
  r.output = dsp::istft(spec);
  return r;
}

WienerResult wiener_enhance_traced(const dsp::Waveform& x, const WienerParams& params) {
  const auto config = dsp::StftConfig::standard(x.sample_rate);
  const auto psd = noise::estimate_noise_psd(dsp::stft(x, config), params.noise);
  return wiener_enhance_with_psd(x, psd, params);
}

dsp::Waveform wiener_enhance(const dsp::Waveform& x, const WienerParams& params) {
  return wiener_enhance_traced(x, params).output;
}

}  // namespace fullend::baseline
