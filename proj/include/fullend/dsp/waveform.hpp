#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fullend::dsp {

/// Mono sampled signal. Samples are dimensionless with nominal range [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  Waveform() = default;
  Waveform(std::vector<double> s, int rate) : samples(std::move(s)), sample_rate(rate) {}

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }

  /// Throws ContractError unless sample_rate > 0 and every sample is finite.
  void validate() const;

  /// Mean squared amplitude over the whole signal.
  double power() const;
  double energy() const;
};

double mean_square(std::span<const double> x);
double energy(std::span<const double> x);
double crest_factor(std::span<const double> x);

}  // namespace fullend::dsp
