#include "fullend/dsp/stft.hpp"

#include <cmath>
#include <numbers>

#include "fullend/dsp/fft.hpp"
#include "fullend/error.hpp"

namespace fullend::dsp {

void Waveform::validate() const {
  if (sample_rate <= 0) throw ContractError("waveform: sample rate must be positive");
  for (double v : samples)
    if (!std::isfinite(v)) throw ContractError("waveform: non-finite sample");
}

double Waveform::power() const { return mean_square(samples); }
double Waveform::energy() const { return dsp::energy(samples); }

double energy(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

double mean_square(std::span<const double> x) {
  return x.empty() ? 0.0 : energy(x) / static_cast<double>(x.size());
}

double crest_factor(std::span<const double> x) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  const double rms = std::sqrt(mean_square(x));
  return rms > 0.0 ? peak / rms : 0.0;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

StftConfig StftConfig::standard(int sample_rate) {
  StftConfig c;
  c.sample_rate = sample_rate;
  c.window_len = static_cast<std::size_t>(std::lround(0.032 * sample_rate));
  c.hop = static_cast<std::size_t>(std::lround(0.008 * sample_rate));
  c.fft_size = c.window_len;
  c.window = hann_window(c.window_len);
  return c;
}

void StftConfig::validate() const {
  if (window_len == 0 || hop == 0 || fft_size < window_len)
    throw ContractError("stft config: invalid sizes");
  if (window_len % hop != 0) throw ContractError("stft config: hop must divide window length");
  if (window.size() != window_len) throw ContractError("stft config: window length mismatch");
  if (sample_rate <= 0) throw ContractError("stft config: sample rate must be positive");
}

void ComplexSpectrogram::validate() const {
  config.validate();
  if (bins != config.bins()) throw ContractError("spectrogram: bin count does not match config");
  if (data.size() != frames * bins) throw ContractError("spectrogram: data size mismatch");
  if (frames != frame_count(signal_length, config))
    throw ContractError("spectrogram: frame count inconsistent with signal length");
}

std::size_t frame_count(std::size_t length, const StftConfig& config) {
  return 1 + length / config.hop;
}

std::size_t reflect_index(long i, std::size_t n) {
  if (n == 1) return 0;
  const long period = 2 * (static_cast<long>(n) - 1);
  long r = i % period;
  if (r < 0) r += period;
  return static_cast<std::size_t>(r < static_cast<long>(n) ? r : period - r);
}

std::vector<double> reflect_pad(std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  std::vector<double> out(n + 2 * pad);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = x[reflect_index(static_cast<long>(i) - static_cast<long>(pad), n)];
  return out;
}

std::vector<double> window_square_sum(std::size_t frames, const StftConfig& config) {
  const std::size_t padded = (frames - 1) * config.hop + config.window_len;
  std::vector<double> acc(padded, 0.0);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t i = 0; i < config.window_len; ++i)
      acc[t * config.hop + i] += config.window[i] * config.window[i];
  return acc;
}

ComplexSpectrogram stft(const Waveform& w, const StftConfig& config) {
  config.validate();
  if (w.empty()) throw ContractError("stft: empty waveform");
  w.validate();
  if (w.sample_rate != config.sample_rate) throw ContractError("stft: sample rate does not match profile");

  ComplexSpectrogram spec;
  spec.config = config;
  spec.bins = config.bins();
  spec.signal_length = w.size();
  spec.frames = frame_count(w.size(), config);
  spec.data.resize(spec.frames * spec.bins);

  const std::vector<double> padded = reflect_pad(w.samples, config.pad());
  RealFft fft(config.fft_size);
  std::vector<double> frame(config.fft_size, 0.0);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const double* src = padded.data() + t * config.hop;
    for (std::size_t i = 0; i < config.window_len; ++i) frame[i] = src[i] * config.window[i];
    fft.forward(frame, {spec.data.data() + t * spec.bins, spec.bins});
  }
  return spec;
}

Waveform istft(const ComplexSpectrogram& spec) {
  spec.validate();
  const StftConfig& config = spec.config;
  const std::vector<double> norm = window_square_sum(spec.frames, config);
  std::vector<double> acc(norm.size(), 0.0);
  RealFft fft(config.fft_size);
  std::vector<double> frame(config.fft_size);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    fft.inverse(spec.frame(t), frame);
    double* dst = acc.data() + t * config.hop;
    for (std::size_t i = 0; i < config.window_len; ++i) dst[i] += frame[i] * config.window[i];
  }
  Waveform out;
  out.sample_rate = config.sample_rate;
  out.samples.resize(spec.signal_length);
  const std::size_t pad = config.pad();
  for (std::size_t n = 0; n < spec.signal_length; ++n) {
    const double d = norm[n + pad];
    out.samples[n] = d > 1e-10 ? acc[n + pad] / d : 0.0;
  }
  return out;
}

std::vector<double> magnitude(const ComplexSpectrogram& spec) {
  std::vector<double> out(spec.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(spec.data[i]);
  return out;
}

std::vector<double> power(const ComplexSpectrogram& spec) {
  std::vector<double> out(spec.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::norm(spec.data[i]);
  return out;
}

double one_sided_energy(std::span<const std::complex<double>> bins, std::size_t fft_size) {
  double acc = 0.0;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const bool edge = k == 0 || (fft_size % 2 == 0 && k == fft_size / 2);
    acc += (edge ? 1.0 : 2.0) * std::norm(bins[k]);
  }
  return acc;
}

}  // namespace fullend::dsp
