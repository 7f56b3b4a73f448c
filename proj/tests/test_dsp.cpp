#include <catch_amalgamated.hpp>

#include "fullend/dsp/filterbank.hpp"
#include "fullend/dsp/resample.hpp"
#include "fullend/dsp/stft.hpp"
#include "fullend/error.hpp"
#include "support.hpp"

using namespace fullend;
using namespace fullend::testing;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("standard profile is 32 ms / 8 ms at 16 kHz", "[stft]") {
  const auto c = dsp::StftConfig::standard(16000);
  CHECK(c.window_len == static_cast<std::size_t>(0.032 * 16000));
  CHECK(c.hop == static_cast<std::size_t>(0.008 * 16000));
  CHECK(c.bins() == 257);
}

TEST_CASE("periodic Hann at hop N/4 overlap-adds to a constant", "[stft]") {
  const auto c = dsp::StftConfig::standard();
  std::vector<double> acc(c.hop, 0.0);
  for (std::size_t i = 0; i < c.window_len; ++i) acc[i % c.hop] += c.window[i];
  for (double a : acc) CHECK_THAT(a, WithinAbs(2.0, 1e-10));
}

TEST_CASE("frame count is one frame per hop plus one", "[stft]") {
  const auto c = dsp::StftConfig::standard();
  CHECK(dsp::frame_count(24000, c) == 188);
  CHECK(dsp::frame_count(640, c) == 6);
  CHECK(dsp::stft(white(1, 1000), c).frames == dsp::frame_count(1000, c));
}

TEST_CASE("zero waveform gives a zero spectrogram and back", "[stft]") {
  const auto c = dsp::StftConfig::standard();
  const auto spec = dsp::stft(dsp::Waveform(std::vector<double>(3000, 0.0), 16000), c);
  for (const auto& v : spec.data) CHECK(std::abs(v) == 0.0);
  const auto back = dsp::istft(spec);
  for (double v : back.samples) CHECK(v == 0.0);
}

TEST_CASE("stft frame matches a direct DFT of the windowed samples", "[stft]") {
  const auto c = dsp::StftConfig::standard();
  const auto w = sine(1000.0, 4096);
  const auto spec = dsp::stft(w, c);
  const std::size_t t = 10;  // frame centred on sample 1280, clear of the padding
  std::vector<double> frame(c.window_len);
  for (std::size_t i = 0; i < c.window_len; ++i) frame[i] = w.samples[t * c.hop - c.pad() + i] * c.window[i];
  const auto oracle = naive_dft(frame);
  std::size_t peak = 0;
  for (std::size_t k = 0; k < c.bins(); ++k) {
    CHECK(std::abs(spec.at(t, k) - oracle[k]) < 1e-9);
    if (std::abs(spec.at(t, k)) > std::abs(spec.at(t, peak))) peak = k;
  }
  CHECK(peak == 32);
}

TEST_CASE("istft inverts stft", "[stft]") {
  const auto c = dsp::StftConfig::standard();
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> len(1024, 65536);
  for (int trial = 0; trial < 40; ++trial) {
    const auto w = white(100 + trial, len(rng), 0.3);
    const auto back = dsp::istft(dsp::stft(w, c));
    REQUIRE(back.size() == w.size());
    CHECK(max_abs_diff(back.samples, w.samples) < 1e-6);
  }
  // signals shorter than the padding still round-trip
  const auto tiny = white(7, 100);
  CHECK(max_abs_diff(dsp::istft(dsp::stft(tiny, c)).samples, tiny.samples) < 1e-6);
}

TEST_CASE("stft and istft are linear", "[stft]") {
  const auto c = dsp::StftConfig::standard();
  const auto a = white(1, 5000), b = white(2, 5000);
  dsp::Waveform mix = a;
  for (std::size_t i = 0; i < mix.size(); ++i) mix.samples[i] = 2.5 * a.samples[i] - 0.75 * b.samples[i];
  const auto sa = dsp::stft(a, c), sb = dsp::stft(b, c), sm = dsp::stft(mix, c);
  for (std::size_t i = 0; i < sm.data.size(); ++i) CHECK(std::abs(sm.data[i] - (2.5 * sa.data[i] - 0.75 * sb.data[i])) < 1e-9);

  auto doubled = sa;
  for (auto& v : doubled.data) v *= 2.0;
  const auto wa = dsp::istft(sa), wd = dsp::istft(doubled);
  for (std::size_t i = 0; i < wa.size(); ++i) CHECK_THAT(wd.samples[i], WithinAbs(2.0 * wa.samples[i], 1e-12));
}

TEST_CASE("Parseval holds per frame", "[stft]") {
  const auto c = dsp::StftConfig::standard();
  const auto w = white(3, 4000);
  const auto spec = dsp::stft(w, c);
  const auto padded = dsp::reflect_pad(w.samples, c.pad());
  for (std::size_t t = 0; t < spec.frames; ++t) {
    double e = 0.0;
    for (std::size_t i = 0; i < c.window_len; ++i) {
      const double v = padded[t * c.hop + i] * c.window[i];
      e += v * v;
    }
    CHECK_THAT(dsp::one_sided_energy(spec.frame(t), c.fft_size), WithinRel(e * c.fft_size, 1e-8));
  }
}

TEST_CASE("stft rejects empty and non-finite input", "[stft]") {
  const auto c = dsp::StftConfig::standard();
  CHECK_THROWS_AS(dsp::stft(dsp::Waveform({}, 16000), c), ContractError);
  CHECK_THROWS_AS(dsp::stft(dsp::Waveform({0.0, std::nan("")}, 16000), c), ContractError);
}

TEST_CASE("resampling keeps length ratio, DC and tone frequency", "[resample]") {
  const auto tone = sine(1000.0, 16000);
  const auto r = dsp::resample(tone, 10000);
  CHECK(r.size() == 10000);
  CHECK(r.sample_rate == 10000);

  double best_f = 0.0, best = -1.0;
  for (double f = 990.0; f <= 1010.0; f += 0.1) {
    const double m = dtft_magnitude(r.samples, f, 10000);
    if (m > best) {
      best = m;
      best_f = f;
    }
  }
  CHECK_THAT(best_f, WithinAbs(1000.0, 1.0));

  const dsp::Waveform dc(std::vector<double>(3000, 0.5), 16000);
  for (int rate : {8000, 10000, 22050, 44100})
    for (double v : dsp::resample(dc, rate).samples) CHECK_THAT(v, WithinAbs(0.5, 1e-12));
  CHECK_THROWS_AS(dsp::resample(dc, 0), ContractError);
}

TEST_CASE("third-octave bands partition their bin range", "[filterbank]") {
  const auto layout = dsp::third_octave_layout(10000, 512, 15, 150.0);
  REQUIRE(layout.bands() == 15);
  CHECK_THAT(layout.centers_hz.front(), WithinAbs(150.0, 1e-9));
  CHECK(layout.high_hz.back() > 4000.0);
  CHECK(layout.high_hz.back() < 4500.0);
  for (std::size_t b = 0; b + 1 < layout.bands(); ++b) CHECK(layout.bin_ranges[b].second <= layout.bin_ranges[b + 1].first);

  dsp::Matrix flat(2, 257, 1.0), zero(2, 257, 0.0);
  const auto fb = dsp::third_octave_bands(flat, layout);
  const auto zb = dsp::third_octave_bands(zero, layout);
  for (std::size_t b = 0; b < 15; ++b) {
    const auto [lo, hi] = layout.bin_ranges[b];
    CHECK_THAT(fb(0, b), WithinAbs(std::sqrt(static_cast<double>(hi - lo)), 1e-12));
    CHECK(zb(1, b) == 0.0);
  }

  const std::size_t k = 6, bin = layout.bin_ranges[k].first;
  dsp::Matrix one(1, 257, 0.0);
  one(0, bin) = 3.0;
  const auto ob = dsp::third_octave_bands(one, layout);
  for (std::size_t b = 0; b < 15; ++b) CHECK(ob(0, b) == (b == k ? 3.0 : 0.0));

  CHECK_THROWS_AS(dsp::third_octave_layout(8000, 512, 15, 150.0), ContractError);
}
