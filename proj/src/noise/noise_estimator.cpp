#include "fullend/noise/noise_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fullend/error.hpp"

namespace fullend::noise {

void EstimatorParams::validate() const {
  auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!open_unit(alpha_s)) throw ContractError("noise estimator: alpha_s must lie in (0, 1)");
  if (min_window < 1) throw ContractError("noise estimator: min_window must be >= 1");
  if (!(bias >= 1.0)) throw ContractError("noise estimator: bias must be >= 1");
  if (!open_unit(alpha_d) || !open_unit(alpha_p)) throw ContractError("noise estimator: alpha_d/alpha_p must lie in (0, 1)");
  if (!(delta > 1.0)) throw ContractError("noise estimator: delta must exceed 1");
}

EstimatorParams EstimatorParams::from_config(const util::KvConfig& cfg, const std::string& section) {
  EstimatorParams p;
  p.alpha_s = cfg.get_double(section + ".alpha_s", p.alpha_s);
  p.min_window = static_cast<std::size_t>(cfg.get_int(section + ".min_window", static_cast<std::int64_t>(p.min_window)));
  p.bias = cfg.get_double(section + ".bias", p.bias);
  p.alpha_d = cfg.get_double(section + ".alpha_d", p.alpha_d);
  p.alpha_p = cfg.get_double(section + ".alpha_p", p.alpha_p);
  p.delta = cfg.get_double(section + ".delta", p.delta);
  p.validate();
  return p;
}

NoiseEstimator::NoiseEstimator(std::size_t bins, EstimatorParams params) : bins_(bins), params_(params) {
  params_.validate();
  if (bins_ < 3) throw ContractError("noise estimator: need at least 3 bins");
  reset();
}

void NoiseEstimator::reset() {
  frames_seen_ = 0;
  periodogram_.assign(bins_, 0.0);
  freq_smoothed_.assign(bins_, 0.0);
  smoothed_.assign(bins_, 0.0);
  minimum_.assign(bins_, 0.0);
  presence_.assign(bins_, 0.0);
  average_.assign(bins_, 0.0);
  estimate_.assign(bins_, 0.0);
  history_.assign(params_.min_window * bins_, 0.0);
}

std::span<const double> NoiseEstimator::update(std::span<const std::complex<double>> frame) {
  if (frame.size() != bins_) throw ContractError("noise estimator: frame has wrong bin count");
  for (std::size_t k = 0; k < bins_; ++k) {
    const double p = std::norm(frame[k]);
    if (!std::isfinite(p)) throw ContractError("noise estimator: non-finite spectrogram value");
    periodogram_[k] = p;
  }
  static constexpr double kTaps[5] = {1.0 / 9, 2.0 / 9, 3.0 / 9, 2.0 / 9, 1.0 / 9};
  const long last = static_cast<long>(bins_) - 1;
  for (long k = 0; k <= last; ++k) {
    double acc = 0.0;
    for (long j = -2; j <= 2; ++j) {
      long i = k + j;
      if (i < 0) i = -i;
      if (i > last) i = 2 * last - i;
      acc += kTaps[j + 2] * periodogram_[static_cast<std::size_t>(i)];
    }
    freq_smoothed_[static_cast<std::size_t>(k)] = acc;
  }

  const bool first = frames_seen_ == 0;
  if (first) {
    smoothed_ = freq_smoothed_;
    average_ = freq_smoothed_;
  } else {
    for (std::size_t k = 0; k < bins_; ++k)
      smoothed_[k] = params_.alpha_s * smoothed_[k] + (1.0 - params_.alpha_s) * freq_smoothed_[k];
  }

  const std::size_t slot = frames_seen_ % params_.min_window;
  std::copy(smoothed_.begin(), smoothed_.end(), history_.begin() + static_cast<long>(slot * bins_));
  const std::size_t filled = std::min(frames_seen_ + 1, params_.min_window);
  std::fill(minimum_.begin(), minimum_.end(), std::numeric_limits<double>::infinity());
  for (std::size_t h = 0; h < filled; ++h) {
    const double* row = history_.data() + h * bins_;
    for (std::size_t k = 0; k < bins_; ++k) minimum_[k] = std::min(minimum_[k], row[k]);
  }

  for (std::size_t k = 0; k < bins_; ++k) {
    const double indicator = smoothed_[k] > params_.delta * minimum_[k] ? 1.0 : 0.0;
    presence_[k] = params_.alpha_p * presence_[k] + (1.0 - params_.alpha_p) * indicator;
    if (!first) {
      const double a = params_.alpha_d + (1.0 - params_.alpha_d) * presence_[k];
      average_[k] = a * average_[k] + (1.0 - a) * freq_smoothed_[k];
    }
    estimate_[k] = std::min(average_[k], params_.bias * minimum_[k]);
  }
  ++frames_seen_;
  return estimate_;
}

dsp::Matrix estimate_noise_psd(const dsp::ComplexSpectrogram& noisy, const EstimatorParams& params) {
  NoiseEstimator est(noisy.bins, params);
  dsp::Matrix out(noisy.frames, noisy.bins);
  for (std::size_t t = 0; t < noisy.frames; ++t) {
    auto row = est.update(noisy.frame(t));
    std::copy(row.begin(), row.end(), out.row(t).begin());
  }
  return out;
}

dsp::Matrix oracle_noise_psd(const dsp::ComplexSpectrogram& noise_only, double alpha) {
  dsp::Matrix out(noise_only.frames, noise_only.bins);
  for (std::size_t t = 0; t < noise_only.frames; ++t) {
    for (std::size_t k = 0; k < noise_only.bins; ++k) {
      const double p = std::norm(noise_only.at(t, k));
      out(t, k) = t == 0 ? p : alpha * out(t - 1, k) + (1.0 - alpha) * p;
    }
  }
  return out;
}

dsp::Matrix psd_feature(const dsp::Matrix& psd, std::size_t expected_frames) {
  if (psd.rows != expected_frames)
    throw ContractError("psd_feature: PSD has " + std::to_string(psd.rows) + " frames, expected " +
                        std::to_string(expected_frames));
  dsp::Matrix out(psd.rows, psd.cols);
  for (std::size_t i = 0; i < psd.data.size(); ++i) {
    if (!(psd.data[i] >= 0.0) || !std::isfinite(psd.data[i])) throw ContractError("psd_feature: invalid PSD value");
    out.data[i] = std::log(psd.data[i] + kPsdFloor);
  }
  return out;
}

}  // namespace fullend::noise
