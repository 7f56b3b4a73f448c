#include <catch_amalgamated.hpp>

#include "fullend/error.hpp"
#include "fullend/noise/noise_estimator.hpp"
#include "fullend/signal/mixing.hpp"
#include "fullend/signal/synth.hpp"
#include "support.hpp"

using namespace fullend;
using namespace fullend::testing;
using Catch::Matchers::WithinAbs;

namespace {

dsp::ComplexSpectrogram first_frames(const dsp::ComplexSpectrogram& spec, std::size_t t) {
  auto out = spec;
  out.frames = t;
  out.data.resize(t * spec.bins);
  return out;
}

double periodogram(const dsp::ComplexSpectrogram& spec, std::size_t t, std::size_t k) {
  return std::norm(spec.at(t, k));
}

}  // namespace

TEST_CASE("white-noise PSD estimate converges to the true PSD", "[noise]") {
  const auto c = dsp::StftConfig::standard();
  const auto spec = dsp::stft(white(3, 160000, 0.1), c);
  const auto psd = noise::estimate_noise_psd(spec);
  const std::size_t tail = static_cast<std::size_t>(2.0 * 16000 / c.hop);
  // oracle: long-run periodogram average over the whole signal
  std::size_t within = 0;
  for (std::size_t k = 0; k < spec.bins; ++k) {
    double truth = 0.0, est = 0.0;
    for (std::size_t t = 0; t < spec.frames; ++t) truth += periodogram(spec, t, k);
    truth /= static_cast<double>(spec.frames);
    for (std::size_t t = spec.frames - tail; t < spec.frames; ++t) est += psd(t, k);
    est /= static_cast<double>(tail);
    const double err_db = 10.0 * std::log10(est / truth);
    if (std::abs(err_db) <= 2.0) ++within;
    UNSCOPED_INFO("bin " << k << " error " << err_db << " dB");
  }
  CHECK(within == spec.bins);
}

TEST_CASE("zero input gives a zero estimate", "[noise]") {
  const auto c = dsp::StftConfig::standard();
  const auto psd = noise::estimate_noise_psd(dsp::stft(dsp::Waveform(std::vector<double>(8000, 0.0), 16000), c));
  for (double v : psd.data) CHECK(v == 0.0);
}

TEST_CASE("estimate stays below the noisy periodogram", "[noise][!shouldfail]") {
  const auto s = signal::synth_speech(1, 5.0);
  const auto m = signal::mix_at_snr(s, signal::synth_noise(signal::NoiseType::White, 2, 5.0), 0.0);
  const auto spec = dsp::stft(m.mixture, dsp::StftConfig::standard());
  const auto psd = noise::estimate_noise_psd(spec);
  std::size_t below = 0, cells = 0;
  for (std::size_t t = 96; t < spec.frames; ++t)
    for (std::size_t k = 0; k < spec.bins; ++k, ++cells)
      if (psd(t, k) <= periodogram(spec, t, k)) ++below;
  const double fraction = static_cast<double>(below) / static_cast<double>(cells);
  INFO("fraction below periodogram " << fraction);
  CHECK(fraction >= 0.99);
}

TEST_CASE("estimate never exceeds bias times the tracked minimum", "[noise][property]") {
  const auto m = signal::mix_at_snr(signal::synth_speech(4, 3.0),
                                    signal::synth_noise(signal::NoiseType::Babble, 5, 3.0), 3.0);
  const auto spec = dsp::stft(m.mixture, dsp::StftConfig::standard());
  noise::NoiseEstimator est(spec.bins);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const auto out = est.update(spec.frame(t));
    for (std::size_t k = 0; k < spec.bins; ++k) {
      REQUIRE(out[k] >= 0.0);
      REQUIRE(std::isfinite(out[k]));
      REQUIRE(out[k] <= est.params().bias * est.minimum()[k] * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("estimator is causal", "[noise][property]") {
  const auto m = signal::mix_at_snr(signal::synth_speech(6, 2.0),
                                    signal::synth_noise(signal::NoiseType::Modulated, 7, 2.0), 0.0);
  const auto spec = dsp::stft(m.mixture, dsp::StftConfig::standard());
  const auto full = noise::estimate_noise_psd(spec);
  for (std::size_t t : {1u, 17u, 96u, 97u, 150u}) {
    const auto part = noise::estimate_noise_psd(first_frames(spec, t));
    REQUIRE(part.rows == t);
    for (std::size_t i = 0; i < part.data.size(); ++i) REQUIRE(part.data[i] == full.data[i]);
  }
}

TEST_CASE("estimator validates parameters and input", "[noise]") {
  noise::EstimatorParams p;
  p.alpha_s = 1.0;
  CHECK_THROWS_AS(p.validate(), ContractError);
  p = {};
  p.min_window = 0;
  CHECK_THROWS_AS(p.validate(), ContractError);
  noise::NoiseEstimator est(257);
  std::vector<std::complex<double>> frame(257, 0.0);
  frame[5] = std::complex<double>(std::nan(""), 0.0);
  CHECK_THROWS_AS(est.update(frame), ContractError);
}

TEST_CASE("oracle mode smooths the true noise periodogram", "[noise]") {
  const auto spec = dsp::stft(white(8, 4000), dsp::StftConfig::standard());
  const auto psd = noise::oracle_noise_psd(spec, 0.9);
  for (std::size_t k = 0; k < spec.bins; ++k) {
    CHECK_THAT(psd(0, k), WithinAbs(periodogram(spec, 0, k), 1e-15));
    CHECK_THAT(psd(1, k), WithinAbs(0.9 * psd(0, k) + 0.1 * periodogram(spec, 1, k), 1e-12));
  }
}

TEST_CASE("psd_feature is a floored logarithm", "[noise]") {
  dsp::Matrix ones(4, 257, 1.0), zeros(4, 257, 0.0), psd(4, 257);
  for (std::size_t i = 0; i < psd.data.size(); ++i) psd.data[i] = 0.01 * static_cast<double>(i + 1);
  auto scaled = psd;
  for (auto& v : scaled.data) v *= 10.0;
  const auto f1 = noise::psd_feature(ones, 4);
  const auto f0 = noise::psd_feature(zeros, 4);
  const auto fa = noise::psd_feature(psd, 4);
  const auto fb = noise::psd_feature(scaled, 4);
  for (std::size_t i = 0; i < f1.data.size(); ++i) {
    CHECK_THAT(f1.data[i], WithinAbs(0.0, 1e-9));
    CHECK_THAT(f0.data[i], WithinAbs(std::log(1e-10), 1e-12));
    CHECK_THAT(fb.data[i] - fa.data[i], WithinAbs(2.302585, 1e-6));
  }
  CHECK_THROWS_AS(noise::psd_feature(ones, 5), ContractError);
}
