#include "fullend/baseline/ssdrc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "fullend/dsp/stft.hpp"
#include "fullend/error.hpp"

namespace fullend::baseline {

CompressionCurve CompressionCurve::knee(double threshold_db, double ratio) {
  if (!(ratio >= 1.0)) throw ContractError("ssdrc: compression ratio must be >= 1");
  return {{{threshold_db - 60.0, threshold_db - 60.0},
           {threshold_db, threshold_db},
           {threshold_db + 30.0, threshold_db + 30.0 / ratio}}};
}

void CompressionCurve::validate() const {
  if (points.size() < 2) throw ContractError("ssdrc: compression curve needs at least two points");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].first > points[i - 1].first))
      throw ContractError("ssdrc: compression curve inputs must be strictly increasing");
    if (points[i].second < points[i - 1].second)
      throw ContractError("ssdrc: compression curve must be monotone non-decreasing");
  }
}

double CompressionCurve::operator()(double in) const {
  std::size_t i = 1;
  while (i + 1 < points.size() && in > points[i].first) ++i;
  const auto [x0, y0] = points[i - 1];
  const auto [x1, y1] = points[i];
  return y0 + (in - x0) * (y1 - y0) / (x1 - x0);
}

void SsdrcParams::validate() const {
  if (!(attack_ms > 0.0 && release_ms > 0.0)) throw ContractError("ssdrc: time constants must be positive");
  if (!(attack_ms < release_ms)) throw ContractError("ssdrc: attack must be shorter than release");
  if (sharpening < 0.0 || max_sharpen_db < 0.0) throw ContractError("ssdrc: sharpening must be non-negative");
  if (!(tilt_corner_hz > 0.0 && tilt_ceiling_hz >= tilt_corner_hz))
    throw ContractError("ssdrc: tilt ceiling must not lie below the corner");
  if (local_smooth_bins >= broad_smooth_bins) throw ContractError("ssdrc: local smoother must be narrower than broad");
  curve.validate();
}

SsdrcParams SsdrcParams::from_config(const util::KvConfig& cfg) {
  SsdrcParams p;
  p.tilt_corner_hz = cfg.get_double("ssdrc.tilt_corner_hz", p.tilt_corner_hz);
  p.tilt_db_per_octave = cfg.get_double("ssdrc.tilt_db_per_octave", p.tilt_db_per_octave);
  p.tilt_ceiling_hz = cfg.get_double("ssdrc.tilt_ceiling_hz", p.tilt_ceiling_hz);
  p.sharpening = cfg.get_double("ssdrc.sharpening", p.sharpening);
  p.attack_ms = cfg.get_double("ssdrc.attack_ms", p.attack_ms);
  p.release_ms = cfg.get_double("ssdrc.release_ms", p.release_ms);
  p.reference_dbfs = cfg.get_double("ssdrc.reference_dbfs", p.reference_dbfs);
  if (cfg.has("ssdrc.curve")) {
    const auto v = cfg.get_doubles("ssdrc.curve");
    if (v.size() % 2 != 0) throw ContractError("ssdrc.curve needs (in, out) pairs");
    p.curve.points.clear();
    for (std::size_t i = 0; i < v.size(); i += 2) p.curve.points.emplace_back(v[i], v[i + 1]);
  } else {
    p.curve = CompressionCurve::knee(cfg.get_double("ssdrc.threshold_dbfs", -20.0), cfg.get_double("ssdrc.ratio", 3.0));
  }
  p.validate();
  return p;
}

namespace {

std::vector<double> box_smooth(const std::vector<double>& x, std::size_t half) {
  std::vector<double> out(x.size());
  const long n = static_cast<long>(x.size());
  for (long k = 0; k < n; ++k) {
    const long lo = std::max(0L, k - static_cast<long>(half));
    const long hi = std::min(n - 1, k + static_cast<long>(half));
    double acc = 0.0;
    for (long j = lo; j <= hi; ++j) acc += x[j];
    out[k] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

void rescale_to_power(dsp::Waveform& w, double target_power) {
  const double p = w.power();
  if (p <= 0.0 || target_power <= 0.0) return;
  const double g = std::sqrt(target_power / p);
  for (double& v : w.samples) v *= g;
}

}  // namespace

dsp::Waveform spectral_shape(const dsp::Waveform& w, const SsdrcParams& params) {
  params.validate();
  const auto config = dsp::StftConfig::standard(w.sample_rate);
  auto spec = dsp::stft(w, config);
  const double bin_hz = static_cast<double>(w.sample_rate) / static_cast<double>(config.fft_size);

  std::vector<double> tilt(spec.bins, 1.0);
  for (std::size_t k = 0; k < spec.bins; ++k) {
    const double f = std::min(bin_hz * static_cast<double>(k), params.tilt_ceiling_hz);
    if (f > params.tilt_corner_hz)
      tilt[k] = std::pow(10.0, params.tilt_db_per_octave * std::log2(f / params.tilt_corner_hz) / 20.0);
  }
  const double max_gain = std::pow(10.0, params.max_sharpen_db / 20.0);
  std::vector<double> mag(spec.bins), gain(spec.bins);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t k = 0; k < spec.bins; ++k) mag[k] = std::abs(spec.at(t, k));
    const auto local = box_smooth(mag, params.local_smooth_bins);
    const auto broad = box_smooth(mag, params.broad_smooth_bins);
    double before = 0.0, after = 0.0;
    for (std::size_t k = 0; k < spec.bins; ++k) {
      double sharpen = 1.0;
      if (broad[k] > 1e-12 && local[k] > 1e-12)
        sharpen = std::clamp(std::pow(local[k] / broad[k], params.sharpening), 1.0 / max_gain, max_gain);
      gain[k] = tilt[k] * sharpen;
      before += mag[k] * mag[k];
      after += mag[k] * mag[k] * gain[k] * gain[k];
    }
    // Shaping moves energy across frequency; the frame keeps its energy.
    const double norm = after > 0.0 ? std::sqrt(before / after) : 1.0;
    for (std::size_t k = 0; k < spec.bins; ++k) spec.at(t, k) *= gain[k] * norm;
  }
  return dsp::istft(spec);
}

dsp::Waveform dynamic_range_compress(const dsp::Waveform& w, const SsdrcParams& params) {
  params.validate();
  w.validate();
  dsp::Waveform out = w;
  const double p = w.power();
  if (p <= 0.0) return out;
  // Normalise to the reference level so the static curve sees a fixed operating point.
  const double pre = std::pow(10.0, params.reference_dbfs / 20.0) / std::sqrt(p);
  const double fs = static_cast<double>(w.sample_rate);
  const double attack = std::exp(-1.0 / (params.attack_ms * 1e-3 * fs));
  const double release = std::exp(-1.0 / (params.release_ms * 1e-3 * fs));
  // The detector peeks one attack time ahead (well under one hop) so onsets are caught.
  const auto ahead = static_cast<std::size_t>(std::lround(params.attack_ms * 1e-3 * fs));
  const std::size_t n = w.size();
  std::deque<std::size_t> window;  // indices of a decreasing run of |x|, sliding max
  std::size_t next = 0;
  double env = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (; next < n && next <= i + ahead; ++next) {
      while (!window.empty() && std::abs(w.samples[window.back()]) <= std::abs(w.samples[next])) window.pop_back();
      window.push_back(next);
    }
    while (window.front() < i) window.pop_front();
    const double peak = std::abs(w.samples[window.front()]) * pre;
    const double c = peak > env ? attack : release;
    env = c * env + (1.0 - c) * peak;
    const double level = 20.0 * std::log10(env + 1e-12);
    const double gain_db = params.curve(level) - level;
    out.samples[i] = w.samples[i] * pre * std::pow(10.0, gain_db / 20.0);
  }
  return out;
}

dsp::Waveform ssdrc(const dsp::Waveform& w, const SsdrcParams& params) {
  w.validate();
  const double p = w.power();
  dsp::Waveform out = dynamic_range_compress(spectral_shape(w, params), params);
  rescale_to_power(out, p);
  return out;
}

dsp::Waveform dsppipe(const dsp::Waveform& x, const WienerParams& wiener, const SsdrcParams& params) {
  return ssdrc(wiener_enhance(x, wiener), params);
}

double spectral_tilt(const dsp::Waveform& w, double lo_hz, double hi_hz) {
  const auto config = dsp::StftConfig::standard(w.sample_rate);
  const auto spec = dsp::stft(w, config);
  const auto pw = dsp::power(spec);
  const double bin_hz = static_cast<double>(w.sample_rate) / static_cast<double>(config.fft_size);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < spec.bins; ++k) {
    const double f = bin_hz * static_cast<double>(k);
    if (f < lo_hz || f > hi_hz) continue;
    double acc = 0.0;
    for (std::size_t t = 0; t < spec.frames; ++t) acc += pw[t * spec.bins + k];
    const double x = std::log2(f);
    const double y = 10.0 * std::log10(acc / static_cast<double>(spec.frames) + 1e-20);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw ContractError("spectral_tilt: band contains fewer than two bins");
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

}  // namespace fullend::baseline
