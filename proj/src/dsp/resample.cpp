#include "fullend/dsp/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "fullend/error.hpp"

namespace fullend::dsp {
namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double blackman(double tau, double half_span) {
  // tau in (-half_span, half_span)
  const double u = (tau + half_span) / (2.0 * half_span);
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return 0.42 - 0.5 * std::cos(2.0 * std::numbers::pi * u) + 0.08 * std::cos(4.0 * std::numbers::pi * u);
}

}  // namespace

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0) throw ContractError("resample: target rate must be positive");
  w.validate();
  if (target_rate == w.sample_rate || w.empty()) return Waveform(w.samples, target_rate);

  const long g = std::gcd(static_cast<long>(w.sample_rate), static_cast<long>(target_rate));
  const long up = target_rate / g;
  const long down = w.sample_rate / g;
  const double cutoff = 0.95 * std::min(1.0, static_cast<double>(target_rate) / w.sample_rate);

  constexpr int half = kResampleTaps / 2;
  // One normalized kernel per fractional phase.
  std::vector<double> table(static_cast<std::size_t>(up) * kResampleTaps);
  for (long phase = 0; phase < up; ++phase) {
    const double frac = static_cast<double>(phase) / static_cast<double>(up);
    double sum = 0.0;
    double* taps = table.data() + phase * kResampleTaps;
    for (int j = 0; j < kResampleTaps; ++j) {
      const double tau = static_cast<double>(j - half + 1) - frac;
      taps[j] = cutoff * sinc(cutoff * tau) * blackman(tau, half);
      sum += taps[j];
    }
    for (int j = 0; j < kResampleTaps; ++j) taps[j] /= sum;
  }

  const std::size_t n_in = w.size();
  const std::size_t n_out =
      static_cast<std::size_t>((static_cast<long long>(n_in) * target_rate + w.sample_rate / 2) / w.sample_rate);
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  const long last = static_cast<long>(n_in) - 1;
  for (std::size_t m = 0; m < n_out; ++m) {
    const long long pos = static_cast<long long>(m) * down;
    const long base = static_cast<long>(pos / up);
    const long phase = static_cast<long>(pos % up);
    const double* taps = table.data() + phase * kResampleTaps;
    double acc = 0.0;
    for (int j = 0; j < kResampleTaps; ++j) {
      long k = base + j - half + 1;
      k = k < 0 ? 0 : (k > last ? last : k);
      acc += taps[j] * w.samples[static_cast<std::size_t>(k)];
    }
    out.samples[m] = acc;
  }
  return out;
}

}  // namespace fullend::dsp
